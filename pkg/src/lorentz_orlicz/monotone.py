"""Monotone functions on (0, inf) and power-weighted integrals of them.

Two representations are supported:

* :class:`StepFunction` -- finitely supported, nonincreasing, constant on
  half-open pieces ``(t[i-1], t[i]]``.  This is what rearranging finite data
  produces.
* :class:`TailedDecreasingFunction` -- strictly decreasing, with a core of
  power or linear pieces and analytic tails at 0 and infinity.  A tail is
  either a power law ``shift + coeff * t**-exponent`` or the *dyadic
  interpolant* of ``coeff * t**-exponent``: the piecewise-linear function
  through the points where the power law takes the values ``y0 * 2**j``.
  Dyadic tails are self-similar, so integrals over them are geometric sums.

Integrals of the shape ``int G(fn(t)) t**alpha dt`` are evaluated by
:func:`integrate_composed`; ``G`` is any "outer" function exposing the
small protocol implemented by :class:`PowerOuter` (and by the Orlicz
functions in :mod:`lorentz_orlicz.functionals`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._quadrature import log_quad, log_quad_infinite, self_similar_sum

LN2 = math.log(2.0)
INF = math.inf

# the shifted-power series is started where shift/power <= 2**-10
_SERIES_RATIO = 2.0 ** -10


class RangeViolation(ValueError):
    """Exponents outside ``p > 1, 0 < r < p``."""


class NotMonotone(ValueError):
    """Data that violates the monotonicity a representation requires."""


# ---------------------------------------------------------------------------
# exponents and intervals


@dataclass(frozen=True)
class Exponents:
    """The triple ``(p, r, q)`` with ``1/p + 1/q = 1/r``."""

    p: float
    r: float
    q: float

    @property
    def lorentz_weight(self) -> float:
        """Exponent ``r/p - 1`` of ``t`` in the Lorentz integrand."""
        return self.r / self.p - 1.0


def make_exponents(p: float, r: float) -> Exponents:
    p, r = float(p), float(r)
    if not p > 1.0:
        raise RangeViolation(f"p > 1 violated: p = {p!r}")
    if not r > 0.0:
        raise RangeViolation(f"r > 0 violated: r = {r!r}")
    if not r < p:
        raise RangeViolation(f"r < p violated: r = {r!r}, p = {p!r}")
    return Exponents(p, r, 1.0 / (1.0 / r - 1.0 / p))


@dataclass(frozen=True)
class Interval:
    lo: float = 0.0
    hi: float = INF

    def __post_init__(self):
        if not (self.lo >= 0.0 and self.hi > self.lo):
            raise ValueError(f"invalid interval ({self.lo}, {self.hi})")

    @property
    def measure(self) -> float:
        return self.hi - self.lo


# ---------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class FunctionalValue:
    """A nonnegative integral, or a divergence flag naming the failing end(s)."""

    value: float
    divergent: tuple = ()
    breakdown: tuple = ()

    @property
    def finite(self) -> bool:
        return not self.divergent

    @property
    def end(self):
        ends = set(self.divergent)
        if not ends:
            return None
        return "both" if len(ends) > 1 else ends.pop()

    def __float__(self):
        return float(self.value)


def _collect(parts) -> FunctionalValue:
    """parts: iterable of (label, value, end-or-None)."""
    ends = []
    breakdown = []
    total = 0.0
    for label, val, end in parts:
        if end is not None:
            if end not in ends:
                ends.append(end)
            breakdown.append((label, INF))
        else:
            breakdown.append((label, float(val)))
            total += float(val)
    ends.sort(key=("zero", "infinity").index)
    return FunctionalValue(INF if ends else total, tuple(ends), tuple(breakdown))


def power_integral(coeff, beta, a, b):
    """``int_a^b coeff * t**beta dt`` in closed form; returns (value, end)."""
    if not b > a or coeff == 0.0:
        return 0.0, None
    if a == 0.0 and beta <= -1.0:
        return INF, "zero"
    if math.isinf(b) and beta >= -1.0:
        return INF, "infinity"
    k = beta + 1.0
    if a == 0.0:
        return coeff * b ** k / k, None
    if math.isinf(b):
        return -coeff * a ** k / k, None
    span = math.log(b / a)
    if k == 0.0:
        return coeff * span, None
    return coeff * a ** k * math.expm1(k * span) / k, None


# ---------------------------------------------------------------------------
# outer functions


@dataclass(frozen=True)
class PowerOuter:
    """``G(s) = s**rho``; the outer function of plain power integrals."""

    rho: float

    def __call__(self, s):
        return np.power(s, self.rho)

    def log(self, ls):
        return self.rho * np.asarray(ls, dtype=float)

    def kinks(self, lo, hi):
        return ()

    def growth(self, end):
        return self.rho

    def homogeneity(self, end):
        return (0.0 if end == "infinity" else INF), 2.0 ** self.rho

    def power_on(self, lo, hi):
        return 1.0, self.rho

    def at_zero(self):
        if self.rho > 0:
            return 0.0
        raise ValueError("nonpositive power of a vanishing function")


# ---------------------------------------------------------------------------
# step functions


def _as_array(t):
    arr = np.asarray(t, dtype=float)
    return arr, arr.ndim == 0


@dataclass(frozen=True)
class StepFunction:
    """Nonincreasing step function: ``values[i]`` on ``(breakpoints[i-1], breakpoints[i]]``."""

    breakpoints: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        bp = tuple(float(x) for x in self.breakpoints)
        vals = tuple(float(x) for x in self.values)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        if len(bp) != len(vals):
            raise ValueError("breakpoints and values differ in length")
        if not all(math.isfinite(x) for x in bp + vals):
            raise ValueError("step data must be finite")
        if bp and bp[0] <= 0.0:
            raise ValueError("breakpoints must be positive")
        if any(b <= a for a, b in zip(bp, bp[1:])):
            raise NotMonotone("breakpoints must be strictly increasing")
        if any(v < 0.0 for v in vals):
            raise ValueError("step values must be nonnegative")
        if any(b > a for a, b in zip(vals, vals[1:])):
            raise NotMonotone("step values must be nonincreasing")

    @property
    def is_zero(self) -> bool:
        return not self.values or self.values[0] == 0.0

    @property
    def support(self) -> float:
        return self.breakpoints[-1] if self.breakpoints else 0.0

    def steps(self):
        """Yield ``(lo, hi, value)`` for every step."""
        lo = 0.0
        for hi, v in zip(self.breakpoints, self.values):
            yield lo, hi, v
            lo = hi

    def __call__(self, t):
        arr, scalar = _as_array(t)
        vals = np.append(np.asarray(self.values, dtype=float), 0.0)
        out = vals[np.searchsorted(np.asarray(self.breakpoints, dtype=float), arr, side="left")]
        return float(out) if scalar else out

    def scaled(self, c: float) -> "StepFunction":
        return StepFunction(self.breakpoints, tuple(c * v for v in self.values))


# ---------------------------------------------------------------------------
# tailed decreasing functions


@dataclass(frozen=True)
class PowerTail:
    """Analytic tail ``shift + coeff * t**-exponent``, or its dyadic interpolant."""

    coeff: float
    exponent: float
    shift: float = 0.0
    side: str = "near"
    dyadic: bool = False

    def __post_init__(self):
        if self.side not in ("near", "far"):
            raise ValueError(f"unknown tail side {self.side!r}")
        if not (self.coeff > 0.0 and self.exponent > 0.0 and self.shift >= 0.0):
            raise ValueError("tail needs coeff > 0, exponent > 0, shift >= 0")
        if self.side == "far" and self.shift != 0.0:
            raise ValueError("a far tail must decay to 0 (shift = 0)")
        if self.dyadic and self.shift != 0.0:
            raise ValueError("dyadic tails interpolate an unshifted power")

    @property
    def self_similar(self) -> bool:
        return self.dyadic or self.shift == 0.0

    @property
    def level_ratio(self) -> float:
        """Abscissa ratio over which the tail value halves (or doubles)."""
        return 2.0 ** (1.0 / self.exponent)


@dataclass(frozen=True)
class PowerPiece:
    """``shift + coeff * t**-exponent`` on ``(lo, hi]``; ``coeff = 0`` gives a constant."""

    lo: float
    hi: float
    shift: float
    coeff: float
    exponent: float

    def value(self, t):
        return self.shift + self.coeff * np.power(t, -self.exponent)

    def inverse(self, s):
        return np.power(self.coeff / (s - self.shift), 1.0 / self.exponent)

    @property
    def pure(self):
        return self.shift == 0.0 or self.coeff == 0.0


@dataclass(frozen=True)
class LinearPiece:
    """Linear from ``(lo, y_lo)`` to ``(hi, y_hi)``."""

    lo: float
    hi: float
    y_lo: float
    y_hi: float

    def value(self, t):
        return (self.y_lo * (self.hi - t) + self.y_hi * (t - self.lo)) / (self.hi - self.lo)

    def inverse(self, s):
        return self.lo + (self.y_lo - s) * ((self.hi - self.lo) / (self.y_lo - self.y_hi))

    pure = False


def _piece_arrays(core):
    n = len(core)
    kind = np.zeros(n, dtype=int)
    lo = np.empty(n)
    hi = np.empty(n)
    A = np.empty(n)
    B = np.empty(n)
    C = np.ones(n)
    for i, pc in enumerate(core):
        lo[i], hi[i] = pc.lo, pc.hi
        if isinstance(pc, LinearPiece):
            kind[i] = 1
            A[i], B[i] = pc.y_lo, pc.y_hi
        else:
            A[i], B[i], C[i] = pc.shift, pc.coeff, pc.exponent
    return kind, lo, hi, A, B, C


@dataclass(frozen=True)
class TailedDecreasingFunction:
    """Strictly decreasing function: near tail on ``(0, t_lo]``, core pieces
    tiling ``(t_lo, t_hi]``, far tail on ``(t_hi, inf)``."""

    near: PowerTail
    far: PowerTail
    junctions: tuple
    core: tuple = ()
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        t_lo, t_hi = (float(x) for x in self.junctions)
        object.__setattr__(self, "junctions", (t_lo, t_hi))
        object.__setattr__(self, "core", tuple(self.core))
        if self.near.side != "near" or self.far.side != "far":
            raise ValueError("tails are on the wrong sides")
        if not (0.0 < t_lo <= t_hi < INF):
            raise ValueError(f"invalid junctions {self.junctions}")
        if not self.core and t_lo != t_hi:
            raise ValueError("an empty core needs coinciding junctions")
        edge = t_lo
        for pc in self.core:
            if pc.lo != edge or not pc.hi > pc.lo:
                raise ValueError("core pieces must tile (t_lo, t_hi]")
            edge = pc.hi
            if isinstance(pc, LinearPiece):
                if not pc.y_lo > pc.y_hi > 0.0:
                    raise NotMonotone("linear piece must be positive and decreasing")
            elif not (pc.coeff > 0.0 and pc.exponent > 0.0):
                raise NotMonotone("power piece must be strictly decreasing")
        if edge != t_hi:
            raise ValueError("core does not end at t_hi")
        kind, lo, hi, A, B, C = _piece_arrays(self.core)
        self._cache.update(kind=kind, lo=lo, hi=hi, A=A, B=B, C=C)
        # values at segment edges, left limits and right values
        y_near = self._tail_formula(self.near, t_lo)
        y_far = self._tail_formula(self.far, t_hi)
        if self.core:
            first, last = self.core[0], self.core[-1]
            y_core_lo = float(first.value(t_lo)) if isinstance(first, PowerPiece) else first.y_lo
            y_core_hi = float(last.value(t_hi)) if isinstance(last, PowerPiece) else last.y_hi
        else:
            y_core_lo = y_core_hi = y_far
        # dyadic tails are anchored on the adjacent core values so that
        # continuity at the junctions is exact
        self._cache["y_near"] = y_core_lo if (self.near.dyadic and self.core) else y_near
        self._cache["y_far"] = y_core_hi if (self.far.dyadic and self.core) else y_far
        if self.near.dyadic and not self.core:
            self._cache["y_near"] = y_near
        if self.far.dyadic and not self.core:
            self._cache["y_far"] = y_far
        self._check_monotone()

    # -- helpers -----------------------------------------------------------

    @staticmethod
    def _tail_formula(tail, t):
        return tail.shift + tail.coeff * t ** -tail.exponent

    @property
    def t_lo(self):
        return self.junctions[0]

    @property
    def t_hi(self):
        return self.junctions[1]

    @property
    def y_near(self) -> float:
        """Value at ``t_lo`` (the near-tail junction)."""
        return self._cache["y_near"]

    @property
    def y_far(self) -> float:
        """Right limit at ``t_hi`` (start of the far tail)."""
        return self._cache["y_far"]

    def _edges(self):
        """Per segment (near, core..., far): (lo, hi, left-limit at lo, value at hi)."""
        segs = [(0.0, self.t_lo, INF, self.y_near)]
        for pc in self.core:
            if isinstance(pc, LinearPiece):
                segs.append((pc.lo, pc.hi, pc.y_lo, pc.y_hi))
            else:
                segs.append((pc.lo, pc.hi, float(pc.value(pc.lo)), float(pc.value(pc.hi))))
        segs.append((self.t_hi, INF, self.y_far, 0.0))
        return segs

    def _check_monotone(self):
        segs = self._edges()
        gaps = []
        for (_, _, _, y_end), (lo, _, y_start, _) in zip(segs, segs[1:]):
            if y_start > y_end * (1.0 + 1e-12):
                raise NotMonotone(f"function increases at t = {lo!r}")
            gaps.append(y_end - y_start)
        self._cache["continuous"] = all(g <= 1e-12 * abs(y) for g, (_, _, _, y) in zip(gaps, segs))
        self._cache["segments"] = segs

    @property
    def continuous(self) -> bool:
        return self._cache["continuous"]

    def knots(self):
        """Core knots ``(t, y)`` when the core is piecewise linear."""
        if not all(isinstance(pc, LinearPiece) for pc in self.core):
            raise ValueError("core is not piecewise linear")
        if not self.core:
            return [(self.t_lo, self.y_near)]
        pts = [(pc.lo, pc.y_lo) for pc in self.core]
        pts.append((self.core[-1].hi, self.core[-1].y_hi))
        return pts

    @classmethod
    def from_knots(cls, knots, near: PowerTail, far: PowerTail):
        knots = [(float(t), float(y)) for t, y in knots]
        core = tuple(
            LinearPiece(t0, t1, y0, y1) for (t0, y0), (t1, y1) in zip(knots, knots[1:])
        )
        return cls(near=near, far=far, junctions=(knots[0][0], knots[-1][0]), core=core)

    def scaled(self, c: float) -> "TailedDecreasingFunction":
        """The function ``c * fn``."""
        def tail(tl):
            return PowerTail(tl.coeff * c, tl.exponent, tl.shift * c, tl.side, tl.dyadic)

        core = []
        for pc in self.core:
            if isinstance(pc, LinearPiece):
                core.append(LinearPiece(pc.lo, pc.hi, pc.y_lo * c, pc.y_hi * c))
            else:
                core.append(PowerPiece(pc.lo, pc.hi, pc.shift * c, pc.coeff * c, pc.exponent))
        return TailedDecreasingFunction(tail(self.near), tail(self.far), self.junctions, tuple(core))

    # -- evaluation --------------------------------------------------------

    def _dyadic_near_base(self, u):
        t0, y0 = self.t_lo, self.y_near
        a = t0 / self.near.level_ratio
        return (2.0 * y0 * (t0 - u) + y0 * (u - a)) / (t0 - a)

    def _dyadic_far_base(self, u):
        t1, y1 = self.t_hi, self.y_far
        b = t1 * self.far.level_ratio
        return (y1 * (b - u) + 0.5 * y1 * (u - t1)) / (b - t1)

    def _core_value(self, t):
        c = self._cache
        idx = np.clip(np.searchsorted(c["hi"], t, side="left"), 0, len(self.core) - 1)
        kind, lo, hi = c["kind"][idx], c["lo"][idx], c["hi"][idx]
        A, B, C = c["A"][idx], c["B"][idx], c["C"][idx]
        with np.errstate(all="ignore"):
            lin = (A * (hi - t) + B * (t - lo)) / (hi - lo)
            pw = A + B * np.power(t, -C)
        return np.where(kind == 1, lin, pw)

    def log_eval(self, x):
        """``ln fn(exp(x))``, robust far beyond the double range of ``t``."""
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape)
        x_lo, x_hi = math.log(self.t_lo), math.log(self.t_hi)
        near = x <= x_lo
        far = x > x_hi
        mid = ~(near | far)
        if np.any(near):
            out[near] = self._log_tail(self.near, x[near], x_lo, +1)
        if np.any(far):
            out[far] = self._log_tail(self.far, x[far], x_hi, -1)
        if np.any(mid):
            out[mid] = np.log(self._core_value(np.exp(x[mid])))
        return out

    def _log_tail(self, tail, x, x_anchor, sign):
        if not tail.dyadic:
            lp = math.log(tail.coeff) - tail.exponent * x
            if tail.shift > 0.0:
                return np.logaddexp(math.log(tail.shift), lp)
            return lp
        lnr = LN2 / tail.exponent
        w = sign * (x_anchor - x) / lnr
        j = np.maximum(np.ceil(w), 1.0)
        if sign > 0:
            u = np.exp(x + (j - 1.0) * lnr)
            return (j - 1.0) * LN2 + np.log(self._dyadic_near_base(u))
        u = np.exp(x - (j - 1.0) * lnr)
        return -(j - 1.0) * LN2 + np.log(self._dyadic_far_base(u))

    def __call__(self, t):
        arr, scalar = _as_array(t)
        out = np.empty(arr.shape)
        near = arr <= self.t_lo
        far = arr > self.t_hi
        mid = ~(near | far)
        if np.any(near):
            out[near] = self._tail_value(self.near, arr[near], +1)
        if np.any(far):
            out[far] = self._tail_value(self.far, arr[far], -1)
        if np.any(mid):
            out[mid] = self._core_value(arr[mid])
        return float(out) if scalar else out

    def _tail_value(self, tail, t, sign):
        if not tail.dyadic:
            return tail.shift + tail.coeff * np.power(t, -tail.exponent)
        lnr = LN2 / tail.exponent
        if sign > 0:
            j = np.maximum(np.ceil(np.log(self.t_lo / t) / lnr), 1.0)
            u = t * np.exp((j - 1.0) * lnr)
            return np.ldexp(self._dyadic_near_base(u), (j - 1.0).astype(int))
        j = np.maximum(np.ceil(np.log(t / self.t_hi) / lnr), 1.0)
        u = t * np.exp(-(j - 1.0) * lnr)
        return np.ldexp(self._dyadic_far_base(u), -(j - 1.0).astype(int))

    # -- inversion ---------------------------------------------------------

    def inverse(self, s):
        """Generalised inverse ``sup{t : fn(t) > s}``; the exact inverse when continuous."""
        arr, scalar = _as_array(s)
        out = np.empty(arr.shape)
        # the core is solved in t directly so jump abscissae come back exactly
        mid = (arr < self.y_near) & (arr >= self.y_far)
        if np.any(mid):
            out[mid] = self._core_inverse(arr[mid])
        if not np.all(mid):
            out[~mid] = np.exp(self.log_inverse(np.log(arr[~mid])))
        return float(out) if scalar else out

    def log_inverse(self, ls):
        """``ln`` of :meth:`inverse` at ``exp(ls)``."""
        ls = np.asarray(ls, dtype=float)
        out = np.empty(ls.shape)
        near = ls >= math.log(self.y_near)
        far = ls < math.log(self.y_far)
        mid = ~(near | far)
        if np.any(near):
            out[near] = self._log_inv_tail(self.near, ls[near], +1)
        if np.any(far):
            out[far] = self._log_inv_tail(self.far, ls[far], -1)
        if np.any(mid):
            out[mid] = np.log(self._core_inverse(np.exp(ls[mid])))
        return out

    def _core_inverse(self, s):
        c = self._cache
        if not self.core:
            return np.full(s.shape, self.t_lo)
        if "y_start" not in c:
            segs = c["segments"][1:-1]
            c["y_start"] = np.array([seg[2] for seg in segs])
            c["y_end"] = np.array([seg[3] for seg in segs])
        # first segment whose end value is <= s
        idx = np.searchsorted(-c["y_end"], -s, side="left")
        past = idx >= len(self.core)
        i = np.minimum(idx, len(self.core) - 1)
        kind, lo, hi = c["kind"][i], c["lo"][i], c["hi"][i]
        A, B, C = c["A"][i], c["B"][i], c["C"][i]
        with np.errstate(all="ignore"):
            lin = lo + (A - s) * ((hi - lo) / (A - B))
            pw = np.power(B / (s - A), 1.0 / C)
        sol = np.clip(np.where(kind == 1, lin, pw), lo, hi)
        sol = np.where(s >= c["y_start"][i], lo, sol)
        return np.where(past, self.t_hi, sol)

    def _log_inv_tail(self, tail, ls, sign):
        if not tail.dyadic:
            if tail.shift > 0.0:
                with np.errstate(all="ignore"):
                    lsm = ls + np.log1p(-tail.shift * np.exp(-ls))
            else:
                lsm = ls
            return (math.log(tail.coeff) - lsm) / tail.exponent
        lnr = LN2 / tail.exponent
        if sign > 0:
            t0, y0 = self.t_lo, self.y_near
            j = np.maximum(np.ceil((ls - math.log(y0)) / LN2), 1.0)
            v = np.exp(ls - (j - 1.0) * LN2)
            a = t0 / tail.level_ratio
            u = a + (2.0 * y0 - v) * ((t0 - a) / y0)
            return np.log(u) - (j - 1.0) * lnr
        t1, y1 = self.t_hi, self.y_far
        j = np.maximum(np.ceil((math.log(y1) - ls) / LN2), 1.0)
        v = np.exp(ls + (j - 1.0) * LN2)
        b = t1 * tail.level_ratio
        u = t1 + (y1 - v) * ((b - t1) / (0.5 * y1))
        return np.log(u) + (j - 1.0) * lnr


def evaluate(fn, t):
    """Value of a step or tailed function at ``t > 0``."""
    arr = np.asarray(t, dtype=float)
    if np.any(~(arr > 0.0)):
        raise ValueError("evaluation point must be positive")
    return fn(t)


def invert(fn: TailedDecreasingFunction, s):
    """The ``t`` with ``fn(t) = s`` (generalised inverse across jumps)."""
    arr = np.asarray(s, dtype=float)
    if np.any(~(arr > 0.0)):
        raise ValueError("inversion level must be positive")
    return fn.inverse(s)


# ---------------------------------------------------------------------------
# integration


def integrate_power(fn, rho: float, alpha: float, interval: Interval | None = None) -> FunctionalValue:
    """``int fn(t)**rho * t**alpha dt`` over ``interval`` (default ``(0, inf)``)."""
    return integrate_composed(fn, PowerOuter(rho), alpha, interval)


def integrate_composed(fn, outer, alpha: float, interval: Interval | None = None) -> FunctionalValue:
    """``int outer(fn(t)) * t**alpha dt`` over ``interval``.

    Divergence is decided from endpoint exponents before anything numeric
    runs; pure power pieces use closed forms; dyadic and unshifted power
    tails are summed as geometric series over their self-similar levels;
    the rest goes to adaptive Gauss-Legendre quadrature in ``ln t``.
    """
    interval = interval or Interval()
    if isinstance(fn, StepFunction):
        return _integrate_step(fn, outer, alpha, interval)
    return _Composer(fn, outer, alpha, interval).run()


def _integrate_step(fn, outer, alpha, iv):
    parts = []
    for i, (lo, hi, v) in enumerate(fn.steps()):
        a, b = max(lo, iv.lo), min(hi, iv.hi)
        if b > a and v > 0.0:
            val, end = power_integral(float(outer(v)), alpha, a, b)
            parts.append((f"step[{i}]", val, end))
    a, b = max(fn.support, iv.lo), iv.hi
    if b > a:
        g0 = outer.at_zero()
        val, end = power_integral(g0, alpha, a, b)
        if g0 != 0.0 or end:
            parts.append(("zero-region", val, end))
    return _collect(parts)


class _Composer:
    def __init__(self, fn, outer, alpha, iv):
        self.fn, self.outer, self.alpha, self.iv = fn, outer, alpha, iv
        self.tasks = []  # (label, ln a, ln b)
        self.linear_tasks = []  # (label, ln a, ln b, affine inverse parameters)
        self.parts = []

    def logf(self, x):
        return self.outer.log(self.fn.log_eval(x)) + (self.alpha + 1.0) * x

    def gl(self, a, b):
        return float(log_quad(self.logf, [math.log(a)], [math.log(b)])[0])

    def queue(self, label, a, b, piece=None):
        """Queue [a, b] for quadrature, split at the kinks of the outer function.

        On a linear piece of ``fn`` the outer function may supply the linear
        piece of its own inverse covering the image; the inverse of the
        composition is then affine in ``t`` and is evaluated without
        rounding through the value ``fn(t)``.
        """
        if not b > a:
            return
        s_hi, s_lo = float(self.fn(a)), float(self.fn(b))
        edges = self._split(a, b, s_lo, s_hi)
        pullback = getattr(self.outer, "linear_pullback", None)
        for x0, x1 in zip(edges, edges[1:]):
            lin = None
            if pullback is not None and isinstance(piece, LinearPiece):
                seg = pullback(float(piece.value(x1)), float(piece.value(x0)))
                if seg is not None:
                    L, Y_L, S = seg
                    m = (piece.y_lo - piece.y_hi) / (piece.hi - piece.lo)
                    lin = (piece.lo, Y_L - piece.y_lo, m, L, S)
            if lin is None:
                self.tasks.append((label, math.log(x0), math.log(x1)))
            else:
                self.linear_tasks.append((label, math.log(x0), math.log(x1), lin))

    def _split(self, a, b, s_lo, s_hi):
        kinks = self.outer.kinks(s_lo, s_hi)
        if not kinks:
            return [a, b]
        cuts = np.unique(np.atleast_1d(self.fn.inverse(np.asarray(kinks, dtype=float))))
        return [a] + [float(c) for c in cuts if a < c < b] + [b]

    def linear_logf(self, x, owner):
        """Integrand on linear pieces: ``ln outer`` from ``ln fn`` and the affine inverse."""
        p = self.linear_params[owner][:, None, :]
        lo, d0, m, L, S = (p[..., i] for i in range(5))
        t = np.exp(x)
        lt = np.log(L + (d0 + (t - lo) * m) * S)
        return self.outer.log_with_inverse(self.fn.log_eval(x), lt) + (self.alpha + 1.0) * x

    def run(self):
        fn, iv = self.fn, self.iv
        lo, hi = iv.lo, iv.hi
        a, b = lo, min(hi, fn.t_lo)
        if b > a:
            self.near_tail(a, b)
        for i, pc in enumerate(fn.core):
            a, b = max(lo, pc.lo), min(hi, pc.hi)
            if b > a:
                self.core_piece(f"core[{i}]", pc, a, b)
        a, b = max(lo, fn.t_hi), hi
        if b > a:
            self.far_tail(a, b)
        sums = {}
        if self.tasks:
            vals = log_quad(self.logf, [t[1] for t in self.tasks], [t[2] for t in self.tasks])
            for (label, _, _), v in zip(self.tasks, vals):
                sums[label] = sums.get(label, 0.0) + float(v)
        if self.linear_tasks:
            self.linear_params = np.array([t[3] for t in self.linear_tasks])
            vals = log_quad(
                self.linear_logf,
                [t[1] for t in self.linear_tasks],
                [t[2] for t in self.linear_tasks],
                with_owner=True,
            )
            for (label, _, _, _), v in zip(self.linear_tasks, vals):
                sums[label] = sums.get(label, 0.0) + float(v)
        self.parts.extend((label, v, None) for label, v in sums.items())
        merged = {}
        for label, v, end in self.parts:
            pv, pe = merged.get(label, (0.0, None))
            merged[label] = (pv + v, pe or end)
        self.parts = [(label, v, end) for label, (v, end) in merged.items()]
        order = {"near": 0, "far": 2}
        self.parts.sort(key=lambda p: (order.get(p[0], 1), _core_index(p[0])))
        return _collect(self.parts)

    def closed_power(self, coeff, exponent, a, b, s_lo, s_hi):
        """Closed form when fn = coeff * t**-exponent on [a, b] and outer is a power there."""
        op = self.outer.power_on(s_lo, s_hi)
        if op is None:
            return None
        oc, og = op
        return power_integral(oc * coeff ** og, self.alpha - exponent * og, a, b)

    def core_piece(self, label, pc, a, b):
        if isinstance(pc, PowerPiece) and pc.pure:
            s_hi, s_lo = float(pc.value(a)), float(pc.value(b))
            if pc.coeff == 0.0:
                res = self.closed_power(pc.shift, 0.0, a, b, s_lo, s_hi)
            else:
                res = self.closed_power(pc.coeff, pc.exponent, a, b, s_lo, s_hi)
            if res is not None:
                self.parts.append((label, res[0], res[1]))
                return
        self.queue(label, a, b, pc)

    # -- tails --------------------------------------------------------------

    def near_tail(self, a, b):
        fn, tail, outer = self.fn, self.fn.near, self.outer
        if a == 0.0:
            beta = self.alpha - tail.exponent * outer.growth("infinity")
            if beta <= -1.0:
                self.parts.append(("near", INF, "zero"))
                return
        s_lo = float(fn(b))
        s_hi = INF if a == 0.0 else float(fn(a))
        if not tail.dyadic and tail.shift == 0.0:
            res = self.closed_power(tail.coeff, tail.exponent, a, b, s_lo, s_hi)
            if res is not None:
                self.parts.append(("near", res[0], res[1]))
                return
        hom = outer.homogeneity("infinity")
        if tail.self_similar and hom is not None:
            self.self_similar_tail("near", a, b, hom, -1)
            return
        if a > 0.0:
            self.queue("near", a, b)
            return
        if isinstance(outer, PowerOuter):
            self.shifted_series(b)
            return
        self.parts.append(("near", log_quad_infinite(self.logf, math.log(b), -1), None))

    def far_tail(self, a, b):
        fn, tail, outer = self.fn, self.fn.far, self.outer
        if math.isinf(b):
            beta = self.alpha - tail.exponent * outer.growth("zero")
            if beta >= -1.0:
                self.parts.append(("far", INF, "infinity"))
                return
        s_hi = float(fn(a)) if a > fn.t_hi else fn.y_far
        s_lo = 0.0 if math.isinf(b) else float(fn(b))
        if not tail.dyadic:
            res = self.closed_power(tail.coeff, tail.exponent, a, b, s_lo, s_hi)
            if res is not None:
                self.parts.append(("far", res[0], res[1]))
                return
        hom = outer.homogeneity("zero")
        if hom is not None:
            self.self_similar_tail("far", a, b, hom, +1)
            return
        if not math.isinf(b):
            self.queue("far", a, b)
            return
        self.parts.append(("far", log_quad_infinite(self.logf, math.log(a), +1), None))

    def self_similar_tail(self, label, a, b, hom, direction):
        """Levels of ratio R away from the junction; geometric once the outer is homogeneous."""
        fn = self.fn
        tail = fn.near if direction < 0 else fn.far
        R = tail.level_ratio
        thr, mu = hom
        if direction < 0:
            z0, y0 = fn.t_lo, fn.y_near
            # level j covers values [y0 2^(j-1), y0 2^j]
            jstar = 1 if thr <= y0 else math.ceil(math.log2(thr / y0)) + 1
            lam = mu * R ** (-(self.alpha + 1.0))
        else:
            z0, y0 = fn.t_hi, fn.y_far
            # level j covers values [y0 2^-j, y0 2^(1-j)]
            jstar = 1 if thr >= y0 else math.ceil(math.log2(y0 / thr)) + 1
            lam = R ** (self.alpha + 1.0) / mu
        zs = z0 * R ** (direction * (jstar - 1))
        # explicit levels between the junction and zs
        ea, eb = (max(a, zs), b) if direction < 0 else (a, min(b, zs))
        if eb > ea:
            self.queue(label, ea, eb)
        ga, gb = (a, min(b, zs)) if direction < 0 else (max(a, zs), b)
        if not gb > ga:
            return
        if lam >= 1.0 and ((direction < 0 and ga == 0.0) or (direction > 0 and math.isinf(gb))):
            self.parts.append((label, INF, "zero" if direction < 0 else "infinity"))
            return

        def level1(u0, u1):
            edges = self._split(u0, u1, float(fn(u1)), float(fn(u0)))
            xa = [math.log(e) for e in edges[:-1]]
            xb = [math.log(e) for e in edges[1:]]
            tot = float(np.sum(log_quad(self.logf, xa, xb)))
            return tot

        val = self_similar_sum(level1, zs, R, direction, lam, ga, gb)
        self.parts.append((label, val, None))

    def shifted_series(self, b):
        """``int_0^b (v + c t^-e)^rho t^alpha dt``: binomial series near 0, quadrature above."""
        tail = self.fn.near
        v, c, e = tail.shift, tail.coeff, tail.exponent
        rho, alpha = self.outer.rho, self.alpha
        ln_cut = (math.log(_SERIES_RATIO * c / v)) / e
        ln_b = math.log(b)
        ln_cut = min(ln_cut, ln_b)
        total = 0.0
        coef = 1.0
        ratio_log = math.log(v / c) + e * ln_cut
        for n in range(80):
            k = alpha - e * rho + e * n + 1.0
            term = coef * math.exp(rho * math.log(c) + n * ratio_log + (alpha - e * rho + 1.0) * ln_cut) / k
            total += term
            if abs(term) <= 1e-17 * abs(total):
                break
            coef *= (rho - n) / (n + 1)
        if ln_b > ln_cut:
            self.tasks.append(("near", ln_cut, ln_b))
        self.parts.append(("near", total, None))


def _core_index(label):
    if label.startswith("core["):
        return int(label[5:-1])
    return 0
