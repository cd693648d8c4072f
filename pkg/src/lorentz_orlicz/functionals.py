"""Lorentz functional J, Orlicz-type modular M and the admissibility integral K.

    J(f)   = int_0^inf f(t)^r t^(r/p - 1) dt
    M(f)   = int_0^inf Psi(f(t)) dt
    K(Psi) = int_0^inf t^(q-1) / Psi(t)^(q/p) dt

An Orlicz function ``Psi`` is either a user-supplied piecewise power
(:class:`PiecewisePowerPsi`) or built from a continuous strictly decreasing
``g`` by ``Psi(g(t)) = g(t)^r t^(r/p-1)`` (:class:`ConstructedPsi`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._quadrature import log_quad, log_quad_infinite, self_similar_sum
from .monotone import (
    INF,
    Exponents,
    FunctionalValue,
    Interval,
    TailedDecreasingFunction,
    _collect,
    integrate_composed,
    integrate_power,
    make_exponents,
    power_integral,
)


@dataclass(frozen=True)
class PsiPiece:
    """``coeff * s**exponent`` on ``(lo, hi]``."""

    lo: float
    hi: float
    coeff: float
    exponent: float


@dataclass(frozen=True)
class PiecewisePowerPsi:
    """Nondecreasing, strictly positive, piecewise power ``Psi``."""

    pieces: tuple

    def __post_init__(self):
        pieces = tuple(
            pc if isinstance(pc, PsiPiece) else PsiPiece(*map(float, pc)) for pc in self.pieces
        )
        object.__setattr__(self, "pieces", pieces)
        if not pieces or pieces[0].lo != 0.0 or not math.isinf(pieces[-1].hi):
            raise ValueError("pieces must cover (0, inf)")
        for a, b in zip(pieces, pieces[1:]):
            if a.hi != b.lo:
                raise ValueError("pieces must be contiguous")
            left = a.coeff * a.hi ** a.exponent
            right = b.coeff * b.lo ** b.exponent
            if right < left * (1.0 - 1e-12):
                raise ValueError(f"Psi decreases at s = {a.hi!r}")
        for pc in pieces:
            if not (pc.coeff > 0.0 and pc.exponent >= 0.0 and pc.hi > pc.lo):
                raise ValueError("Psi must be strictly positive and nondecreasing")

    @property
    def bounds(self):
        return np.array([pc.hi for pc in self.pieces[:-1]])

    def _locate(self, s):
        return np.searchsorted(self.bounds, s, side="left")

    def __call__(self, s):
        arr = np.asarray(s, dtype=float)
        idx = self._locate(arr)
        c = np.array([pc.coeff for pc in self.pieces])[idx]
        e = np.array([pc.exponent for pc in self.pieces])[idx]
        out = c * np.power(arr, e)
        return float(out) if out.ndim == 0 else out

    def log(self, ls):
        ls = np.asarray(ls, dtype=float)
        idx = self._locate(np.exp(ls))
        c = np.log([pc.coeff for pc in self.pieces])[idx]
        e = np.array([pc.exponent for pc in self.pieces])[idx]
        return c + e * ls

    def kinks(self, lo, hi):
        return [b for b in self.bounds if lo < b < hi]

    def growth(self, end):
        return self.pieces[0 if end == "zero" else -1].exponent

    def homogeneity(self, end):
        if end == "zero":
            pc = self.pieces[0]
            return pc.hi, 2.0 ** pc.exponent
        pc = self.pieces[-1]
        return pc.lo, 2.0 ** pc.exponent

    def power_on(self, lo, hi):
        i, j = self._locate(lo), self._locate(hi)
        if i != j and not (j == i + 1 and hi == self.pieces[i].hi):
            return None
        pc = self.pieces[int(i)]
        return pc.coeff, pc.exponent

    def at_zero(self):
        pc = self.pieces[0]
        return 0.0 if pc.exponent > 0.0 else pc.coeff


def power_psi(exponent: float, coeff: float = 1.0) -> PiecewisePowerPsi:
    return PiecewisePowerPsi((PsiPiece(0.0, INF, coeff, exponent),))


def two_power_psi(p: float, eps: float) -> PiecewisePowerPsi:
    """``s**(p - eps)`` on ``(0, 1]`` and ``s**(p + eps)`` above 1."""
    if not 0.0 <= eps <= p:
        raise ValueError(f"two-power Psi needs 0 <= eps <= p, got eps = {eps!r}")
    return PiecewisePowerPsi((PsiPiece(0.0, 1.0, 1.0, p - eps), PsiPiece(1.0, INF, 1.0, p + eps)))


@dataclass(frozen=True)
class ConstructedPsi:
    """``Psi(s) = s**r * phi(s)`` with ``phi(s) = g^{-1}(s)**(r/p - 1)``."""

    g: TailedDecreasingFunction
    exponents: Exponents

    def __post_init__(self):
        if not self.g.continuous:
            raise ValueError("Psi can only be built from a continuous g")

    def _knot_values(self):
        vals = [self.g.y_near]
        for pc in self.g.core:
            vals.append(float(pc.value(pc.hi)))
        return vals  # descending

    def log(self, ls):
        e = self.exponents
        ls = np.asarray(ls, dtype=float)
        return e.r * ls + e.lorentz_weight * self.g.log_inverse(ls)

    def log_with_inverse(self, ls, lt):
        """``ln Psi(s)`` given ``ln s`` and ``ln g^{-1}(s)`` computed elsewhere."""
        e = self.exponents
        return e.r * ls + e.lorentz_weight * lt

    def linear_pullback(self, s_lo, s_hi):
        """The linear piece of ``g`` whose values cover ``[s_lo, s_hi]``.

        Returns ``(L, Y_L, S)`` with ``g^{-1}(s) = L + (Y_L - s) * S`` there,
        or ``None`` when no single linear piece covers the range.
        """
        g = self.g
        s_mid = 0.5 * (s_lo + s_hi)
        if g.y_far <= s_mid <= g.y_near:
            if not g.core:
                return None
            ys = self._core_values
            i = int(np.searchsorted(-ys, -s_mid, side="left")) - 1
            i = min(max(i, 0), len(g.core) - 1)
            pc = g.core[i]
            if not hasattr(pc, "y_lo"):
                return None
            top, bottom, L, H = pc.y_lo, pc.y_hi, pc.lo, pc.hi
        elif s_mid > g.y_near and g.near.dyadic:
            j = max(math.ceil(math.log2(s_mid / g.y_near)), 1)
            lnr = math.log(g.near.level_ratio)
            top, bottom = math.ldexp(g.y_near, j), math.ldexp(g.y_near, j - 1)
            L, H = g.t_lo * math.exp(-j * lnr), g.t_lo * math.exp(-(j - 1) * lnr)
        elif s_mid < g.y_far and g.far.dyadic:
            j = max(math.ceil(math.log2(g.y_far / s_mid)), 1)
            lnr = math.log(g.far.level_ratio)
            top, bottom = math.ldexp(g.y_far, 1 - j), math.ldexp(g.y_far, -j)
            L, H = g.t_hi * math.exp((j - 1) * lnr), g.t_hi * math.exp(j * lnr)
        else:
            return None
        if not (bottom <= s_lo and s_hi <= top):
            return None
        return L, top, (H - L) / (top - bottom)

    @property
    def _core_values(self):
        return np.array(self._knot_values())

    def _log_inverse_at(self, arr):
        """``ln g^{-1}(s)`` for ``s`` given directly.

        Inverting ``s`` itself rather than ``exp(ln s)`` avoids an extra
        rounding of ``s`` that flat stretches of ``g`` would amplify.
        """
        with np.errstate(all="ignore"):
            t = np.asarray(self.g.inverse(arr), dtype=float)
            lt = np.log(t)
        bad = ~np.isfinite(lt)
        if np.any(bad):
            lt = np.where(bad, self.g.log_inverse(np.log(arr)), lt)
        return lt

    def __call__(self, s):
        arr = np.asarray(s, dtype=float)
        e = self.exponents
        out = np.exp(e.r * np.log(arr) + e.lorentz_weight * self._log_inverse_at(arr))
        return float(out) if out.ndim == 0 else out

    def phi(self, s):
        arr = np.asarray(s, dtype=float)
        out = np.exp(self.exponents.lorentz_weight * self._log_inverse_at(arr))
        return float(out) if out.ndim == 0 else out

    def kinks(self, lo, hi):
        g = self.g
        ks = [y for y in self._knot_values() if lo < y < hi]
        if g.near.dyadic and hi > g.y_near:
            j_hi = math.floor(math.log2(hi / g.y_near)) if math.isfinite(hi) else 0
            ks += [g.y_near * 2.0 ** j for j in range(1, j_hi + 1) if lo < g.y_near * 2.0 ** j < hi]
        if g.far.dyadic and lo < g.y_far:
            j_hi = math.floor(math.log2(g.y_far / lo)) if lo > 0.0 else 0
            ks += [g.y_far * 2.0 ** -j for j in range(1, j_hi + 1) if lo < g.y_far * 2.0 ** -j < hi]
        return sorted(ks)

    def _tail(self, end):
        return self.g.near if end == "infinity" else self.g.far

    def growth(self, end):
        e = self.exponents
        return e.r - e.lorentz_weight / self._tail(end).exponent

    def homogeneity(self, end):
        tail = self._tail(end)
        if not tail.self_similar:
            return None
        e = self.exponents
        mu = 2.0 ** e.r * tail.level_ratio ** (-e.lorentz_weight)
        return (self.g.y_near if end == "infinity" else self.g.y_far), mu

    def power_on(self, lo, hi):
        g, e = self.g, self.exponents
        for end, inside in (("infinity", lo >= g.y_near), ("zero", hi <= g.y_far)):
            tail = self._tail(end)
            if inside and not tail.dyadic and tail.shift == 0.0:
                k = e.lorentz_weight / tail.exponent
                return tail.coeff ** k, e.r - k
        return None

    def at_zero(self):
        return 0.0


# ---------------------------------------------------------------------------
# the three functionals


def lorentz_functional(f, e: Exponents) -> FunctionalValue:
    """``J = int f^r t^(r/p-1) dt``; closed form on steps."""
    return integrate_power(f, e.r, e.lorentz_weight)


def orlicz_modular(psi, f, interval: Interval | None = None) -> FunctionalValue:
    """``M = int Psi(f(t)) dt``; exact ``Psi(v) * |piece|`` on steps."""
    return integrate_composed(f, psi, 0.0, interval)


def psi_power_integral(psi, A: float, B: float, lo: float = 0.0, hi: float = INF) -> FunctionalValue:
    """``int_lo^hi s**A * Psi(s)**B ds`` with analytic divergence detection."""
    parts = []
    if lo == 0.0 and A + B * psi.growth("zero") <= -1.0:
        parts.append(("zero", INF, "zero"))
    if math.isinf(hi) and A + B * psi.growth("infinity") >= -1.0:
        parts.append(("infinity", INF, "infinity"))
    if parts:
        return _collect(parts)
    if isinstance(psi, PiecewisePowerPsi):
        for i, pc in enumerate(psi.pieces):
            a, b = max(lo, pc.lo), min(hi, pc.hi)
            if b > a:
                val, end = power_integral(pc.coeff ** B, A + pc.exponent * B, a, b)
                parts.append((f"piece[{i}]", val, end))
        return _collect(parts)
    return _constructed_integral(psi, A, B, lo, hi)


def _constructed_integral(psi: ConstructedPsi, A, B, lo, hi):
    g = psi.g

    def logf(x):
        return (A + 1.0) * x + B * psi.log(x)

    def gl(a, b):
        cuts = [a] + psi.kinks(a, b) + [b]
        xa = [math.log(c) for c in cuts[:-1]]
        xb = [math.log(c) for c in cuts[1:]]
        return float(np.sum(log_quad(logf, xa, xb)))

    parts = []
    # far tail of g <-> small s
    a, b = lo, min(hi, g.y_far)
    if b > a:
        parts.append(("far", _s_tail(psi, "zero", A, B, a, b, gl, logf), None))
    # core
    vals = psi._knot_values()
    edges = sorted(set(vals) | {g.y_far, g.y_near})
    tasks = [(max(lo, x0), min(hi, x1)) for x0, x1 in zip(edges, edges[1:])]
    tasks = [(x0, x1) for x0, x1 in tasks if x1 > x0]
    if tasks:
        res = log_quad(logf, [math.log(x0) for x0, _ in tasks], [math.log(x1) for _, x1 in tasks])
        parts.append(("core", float(np.sum(res)), None))
    a, b = max(lo, g.y_near), hi
    if b > a:
        parts.append(("near", _s_tail(psi, "infinity", A, B, a, b, gl, logf), None))
    return _collect(parts)


def _s_tail(psi, end, A, B, a, b, gl, logf):
    op = psi.power_on(a, b)
    if op is not None:
        c, k = op
        return power_integral(c ** B, A + k * B, a, b)[0]
    hom = psi.homogeneity(end)
    if hom is not None:
        anchor, mu = hom
        if end == "infinity":
            lam = 2.0 ** (A + 1.0) * mu ** B
            return self_similar_sum(gl, anchor, 2.0, +1, lam, a, b)
        lam = 2.0 ** (-(A + 1.0)) * mu ** (-B)
        return self_similar_sum(gl, anchor, 2.0, -1, lam, a, b)
    if math.isfinite(b) and a > 0.0:
        return gl(a, b)
    if end == "infinity":
        return gl(a, 2.0 * a) + log_quad_infinite(logf, math.log(2.0 * a), +1)
    return gl(b / 2.0, b) + log_quad_infinite(logf, math.log(b / 2.0), -1)


def condition3_integral(psi, e: Exponents) -> FunctionalValue:
    """``K = int_0^inf t^(q-1) / Psi(t)^(q/p) dt``.

    The breakdown separates ``(0, 1]`` from ``[1, inf)`` so a divergence can
    be traced to the end that causes it.
    """
    A, B = e.q - 1.0, -e.q / e.p
    low = psi_power_integral(psi, A, B, 0.0, 1.0)
    high = psi_power_integral(psi, A, B, 1.0, INF)
    return _collect([
        ("(0,1]", low.value, low.end),
        ("[1,inf)", high.value, high.end),
    ])


@dataclass(frozen=True)
class CalderonValue(FunctionalValue):
    """Calderon's integral plus the matching tail of the admissibility integral."""

    condition3_tail: FunctionalValue | None = None


def calderon_condition(psi, n: int) -> CalderonValue:
    """``int_1^inf (t / Psi(t))^(1/(n-1)) dt`` and, alongside, the ``[1, inf)``
    part of ``K`` at ``p = n, r = 1``; the two integrands coincide."""
    if int(n) != n or n < 2:
        raise ValueError(f"dimension n must be an integer >= 2, got {n!r}")
    k = 1.0 / (n - 1)
    val = psi_power_integral(psi, k, -k, 1.0, INF)
    e = make_exponents(n, 1.0)
    tail = psi_power_integral(psi, e.q - 1.0, -e.q / e.p, 1.0, INF)
    return CalderonValue(val.value, val.divergent, val.breakdown, condition3_tail=tail)


def calderon_integrand(psi, n, t):
    k = 1.0 / (n - 1)
    return np.power(np.asarray(t, dtype=float) / psi(t), k)


def condition3_integrand(psi, e: Exponents, t):
    t = np.asarray(t, dtype=float)
    return np.power(t, e.q - 1.0) / np.power(psi(t), e.q / e.p)
