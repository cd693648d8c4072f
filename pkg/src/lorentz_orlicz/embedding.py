"""The embedding ``J(f) <= c * K(Psi)^(r/q) * M(Psi, f)^(r/p)`` made checkable.

``f`` is split into dyadic level sets ``I_k = {2^k < f <= 2^(k+1)}``; the
inequality then follows from a four-link chain whose intermediate sums are
all reported:

    J  <=  S6 = (p/r) sum 2^((k+1) r) |I_k|^(r/p)
       <=  (p/r) H1^(r/q) H2^(r/p)                 (Hoelder, r/q + r/p = 1)
    H1 =   sum 2^((k+1) q) / Psi(2^k)^(q/p)  <=  S8 = c8 K
    H2 =   S9 = sum |I_k| Psi(2^k)           <=  M

Every comparison is made between logarithms, so large ``q`` (where
``2^q`` alone overflows) is handled without loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._quadrature import log_quad
from .functionals import condition3_integral, lorentz_functional, orlicz_modular
from .monotone import Exponents, Interval, StepFunction

SLACK = 1e-12
LN2 = math.log(2.0)


def dyadic_level(v: float) -> int:
    """The integer ``k`` with ``2^k < v <= 2^(k+1)``; exact for every positive double."""
    if not v > 0.0 or not math.isfinite(v):
        raise ValueError(f"dyadic level needs a positive finite value, got {v!r}")
    m, e = math.frexp(v)
    return e - 2 if m == 0.5 else e - 1


@dataclass(frozen=True)
class DyadicLevel:
    k: int
    lo: float
    hi: float

    @property
    def interval(self) -> Interval:
        return Interval(self.lo, self.hi)

    @property
    def measure(self) -> float:
        return float(Fraction(self.hi) - Fraction(self.lo))


@dataclass(frozen=True)
class DyadicDecomposition:
    """Nonempty levels in decreasing ``k``; their intervals tile the support of ``f``."""

    pieces: tuple

    @property
    def levels(self):
        return [pc.k for pc in self.pieces]


def dyadic_decompose(f: StepFunction) -> DyadicDecomposition:
    if f.is_zero:
        raise ValueError("the zero function has no dyadic levels")
    pieces = []
    for lo, hi, v in f.steps():
        if v == 0.0:
            break
        k = dyadic_level(v)
        if pieces and pieces[-1].k == k:
            pieces[-1] = DyadicLevel(k, pieces[-1].lo, hi)
        else:
            pieces.append(DyadicLevel(k, lo, hi))
    return DyadicDecomposition(tuple(pieces))


def log_level_constant(e: Exponents) -> float:
    """``ln c8``, finite for every valid ``q``."""
    q = e.q
    return math.log(q) + q * LN2 - math.log1p(-(2.0 ** -q))


def level_constant(e: Exponents) -> float:
    """``c8 = q 2^q / (1 - 2^-q)`` (``inf`` once ``2^q`` leaves the double range).

    Bounding ``Psi <= Psi(2^k)`` on ``[2^(k-1), 2^k]`` and integrating
    ``t^(q-1)`` exactly gives
    ``2^((k+1)q) / Psi(2^k)^(q/p) <= c8 * int_{2^(k-1)}^{2^k} t^(q-1) / Psi^(q/p)``.
    Equality holds when ``Psi`` is constant on that interval.
    """
    return _exp(log_level_constant(e))


def embedding_constant(e: Exponents) -> float:
    """``c = (p/r) * c8^(r/q)``."""
    return e.p / e.r * math.exp(e.r / e.q * log_level_constant(e))


def _exp(x: float) -> float:
    return math.exp(x) if x < 709.7 else math.inf


def _log(x: float) -> float:
    return math.log(x) if x > 0.0 else -math.inf


def _logsumexp(xs) -> float:
    m = max(xs)
    return m + math.log(math.fsum(math.exp(x - m) for x in xs))


def _le(la: float, lb: float) -> bool:
    """``exp(la) <= exp(lb)`` up to the relative slack."""
    return la <= lb + SLACK


def _log_window_ratio(psi, k: int, e: Exponents) -> float:
    """``ln`` of ``2^((k+1)q) / Psi(2^k)^(q/p)`` over ``int_{2^(k-1)}^{2^k} t^(q-1) / Psi^(q/p)``.

    With ``t = 2^k s`` the ratio is ``2^q / I`` where
    ``I = int_{1/2}^1 s^(q-1) (Psi(2^k) / Psi(2^k s))^(q/p) ds``.  The
    integrand is rescaled by its largest sampled value before exponentiating.
    """
    q, w = e.q, e.q / e.p
    lk = k * LN2
    top = float(psi.log(lk))
    cuts = sorted({-LN2, 0.0, *(math.log(x) - lk for x in psi.kinks(2.0 ** (k - 1), 2.0 ** k))})
    cuts = [x for x in cuts if -LN2 <= x <= 0.0]

    probe = np.unique(np.concatenate([np.linspace(-LN2, 0.0, 129), cuts]))
    peak = float(np.max(q * probe - w * (psi.log(lk + probe) - top)))

    def logf(x):
        return q * x - w * (psi.log(lk + x) - top) - peak

    parts = log_quad(logf, np.array(cuts[:-1]), np.array(cuts[1:]), rtol=1e-13)
    return q * LN2 - peak - math.log(math.fsum(parts))


@dataclass(frozen=True)
class LevelCheck:
    """Per-level quantities; logarithms keep large ``q`` representable."""

    k: int
    measure: float
    log_psi_at_level: float
    log_window_ratio: float  # ln of Hoelder term over the K-window integral
    log_c8: float
    modular_on_level: float  # int over I_k of Psi(f)

    @property
    def window_ratio(self) -> float:
        return _exp(self.log_window_ratio)

    def holds_with(self, factor: float = 1.0) -> bool:
        """The level inequality with ``factor * c8`` in place of ``c8``."""
        return _le(self.log_window_ratio, self.log_c8 + math.log(factor))

    @property
    def lower_bound_holds(self) -> bool:
        return _le(math.log(self.measure) + self.log_psi_at_level, _log(self.modular_on_level))


@dataclass(frozen=True)
class EmbeddingReport:
    J: float
    K: float
    M: float
    c: float
    c8: float
    log_c8: float
    bound: float
    S6: float
    hoelder: float
    H1: float
    S8: float
    S9: float
    holds: bool
    hypothesis_failed: bool
    K_end: str | None = None
    M_end: str | None = None
    links: dict = field(default_factory=dict)
    levels: tuple = ()

    @property
    def chain(self) -> dict:
        return {"S6": self.S6, "hoelder": self.hoelder, "S8": self.S8, "S9": self.S9}


def verify_embedding(f: StepFunction, psi, e: Exponents, per_level: bool = False) -> EmbeddingReport:
    """Evaluate every quantity of the chain and test each link.

    With a divergent ``K`` or ``M`` the inequality is vacuous: ``holds`` is
    true and ``hypothesis_failed`` marks the case.  ``per_level`` adds the
    level-wise Hoelder-term and modular lower-bound checks.
    """
    dec = dyadic_decompose(f)
    p, r, q = e.p, e.r, e.q
    J = lorentz_functional(f, e).value
    Kv = condition3_integral(psi, e)
    Mv = orlicz_modular(psi, f)
    log_c8 = log_level_constant(e)
    c = embedding_constant(e)

    log_psi = [float(psi.log(pc.k * LN2)) for pc in dec.pieces]
    log_m = [math.log(pc.measure) for pc in dec.pieces]
    ks = [pc.k for pc in dec.pieces]
    l_s6 = math.log(p / r) + _logsumexp([(k + 1) * r * LN2 + r / p * lm for k, lm in zip(ks, log_m)])
    l_h1 = _logsumexp([(k + 1) * q * LN2 - q / p * lp for k, lp in zip(ks, log_psi)])
    l_s9 = _logsumexp([lm + lp for lm, lp in zip(log_m, log_psi)])
    l_hoelder = math.log(p / r) + r / q * l_h1 + r / p * l_s9
    l_K, l_M = _log(Kv.value), _log(Mv.value)
    l_s8 = log_c8 + l_K
    l_J = _log(J)
    failed = not (Kv.finite and Mv.finite)
    l_bound = math.inf if failed else math.log(c) + r / q * l_K + r / p * l_M
    links = {
        "J<=S6": _le(l_J, l_s6),
        "S6<=hoelder": _le(l_s6, l_hoelder),
        "H1<=S8": _le(l_h1, l_s8),
        "S9<=M": _le(l_s9, l_M),
        "split<=bound": _le(math.log(p / r) + r / q * l_s8 + r / p * l_s9, l_bound),
    }
    levels = ()
    if per_level:
        levels = tuple(
            LevelCheck(
                pc.k,
                pc.measure,
                lp,
                _log_window_ratio(psi, pc.k, e),
                log_c8,
                orlicz_modular(psi, f, pc.interval).value,
            )
            for pc, lp in zip(dec.pieces, log_psi)
        )
    return EmbeddingReport(
        J=J,
        K=Kv.value,
        M=Mv.value,
        c=c,
        c8=_exp(log_c8),
        log_c8=log_c8,
        bound=_exp(l_bound),
        S6=_exp(l_s6),
        hoelder=_exp(l_hoelder),
        H1=_exp(l_h1),
        S8=_exp(l_s8),
        S9=_exp(l_s9),
        holds=True if failed else _le(l_J, l_bound),
        hypothesis_failed=failed,
        K_end=Kv.end,
        M_end=Mv.end,
        links=links,
        levels=levels,
    )
