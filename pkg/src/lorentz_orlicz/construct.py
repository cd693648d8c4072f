"""Build an admissible ``Psi`` with finite modular for a given ``f``.

Pipeline (run on ``2f`` so that the final modular bound covers ``f``):

1. a cushion ``f0 = delta * t^-a`` on ``(0, 1]`` and ``delta * t^-b`` above 1,
   with ``J(f0) = J(f) / 2``;
2. ``g0 = f + f0``, strictly decreasing with range ``(0, inf)``;
3. ``g``: linear interpolation through ``(g0^{-1}(2^k), 2^k)`` over a window of
   levels, continued by self-similar dyadic tails;
4. ``Psi(s) = s^r * g^{-1}(s)^(r/p - 1)`` so that ``Psi(g(t)) = g(t)^r t^(r/p-1)``.

Every intermediate claim is checked numerically and recorded as a named
:class:`Check`; checks annotate and never abort.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._quadrature import log_quad
from .functionals import (
    ConstructedPsi,
    PiecewisePowerPsi,
    condition3_integral,
    lorentz_functional,
    orlicz_modular,
    psi_power_integral,
)
from .monotone import (
    Exponents,
    Interval,
    PowerPiece,
    PowerTail,
    StepFunction,
    TailedDecreasingFunction,
    integrate_power,
)

# levels kept above the largest step value, so that the shifted near tail of
# g0 is a pure power to about 2^-32 relative accuracy beyond the window
SHIFT_MARGIN = 32
DEFAULT_PAD = 4
DECAY_DOUBLINGS = 40
COMPOSITION_RTOL = 1e-10
IDENTITY_K_RTOL = 1e-6
IDENTITY_M_RTOL = 1e-8
_SEED = 20240229


@dataclass(frozen=True)
class CushionParams:
    a: float
    b: float
    delta: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.delta * np.where(t <= 1.0, t ** -self.a, t ** -self.b)


def _positive_steps(f: StepFunction):
    return [(lo, hi, v) for lo, hi, v in f.steps() if v > 0.0]


def make_cushion(f: StepFunction, e: Exponents) -> CushionParams:
    """``a = 1/(2p)``, ``b = 2/p`` and ``delta`` with ``J(f0) = J(f) / 2``."""
    if f.is_zero:
        raise ValueError("the zero function admits no cushion")
    J = lorentz_functional(f, e)
    if not J.finite or not J.value > 0.0:
        raise ValueError("J(f) must be finite and positive")
    p, r = e.p, e.r
    a, b = 1.0 / (2.0 * p), 2.0 / p
    C = 1.0 / (r / p - a * r) + 1.0 / (b * r - r / p)
    return CushionParams(a, b, (J.value / (2.0 * C)) ** (1.0 / r))


def cushion_function(cushion: CushionParams) -> TailedDecreasingFunction:
    """``f0`` itself as a tailed function (pure power tails meeting at 1)."""
    near = PowerTail(cushion.delta, cushion.a, side="near")
    far = PowerTail(cushion.delta, cushion.b, side="far")
    return TailedDecreasingFunction(near, far, (1.0, 1.0))


def build_g0(f: StepFunction, cushion: CushionParams) -> TailedDecreasingFunction:
    """``f + f0`` represented exactly by shifted power pieces."""
    steps = _positive_steps(f)
    if not steps:
        raise ValueError("the zero function admits no cushion")
    d, a, b = cushion.delta, cushion.a, cushion.b
    t_first, t_last = steps[0][1], steps[-1][1]
    t_lo, t_hi = min(t_first, 1.0), max(t_last, 1.0)
    cuts = sorted({hi for _, hi, _ in steps} | {1.0})
    cuts = [c for c in cuts if t_lo <= c <= t_hi]
    core = []
    for x0, x1 in zip(cuts, cuts[1:]):
        core.append(PowerPiece(x0, x1, f(x1), d, a if x1 <= 1.0 else b))
    near = PowerTail(d, a, shift=steps[0][2], side="near")
    far = PowerTail(d, b, side="far")
    return TailedDecreasingFunction(near, far, (t_lo, t_hi), tuple(core))


def level_window(g0: TailedDecreasingFunction, pad: int = DEFAULT_PAD):
    """Dyadic levels ``k_min .. k_max`` interpolated by ``g``."""
    top = max(float(g0(g0.t_lo)), g0.near.shift)
    k_max = math.ceil(math.log2(top)) + SHIFT_MARGIN + pad
    k_min = math.floor(math.log2(g0.y_far)) - 1 - pad
    return k_min, k_max


def build_g(g0: TailedDecreasingFunction, pad: int = DEFAULT_PAD) -> TailedDecreasingFunction:
    """Piecewise-linear interpolant of ``g0`` through its dyadic level crossings.

    Where ``g0`` jumps across several levels the crossings coincide; only the
    highest level is kept there.  Outside the window ``g`` continues as the
    dyadic interpolant of the power tails of ``g0``, so every level beyond the
    window is again a crossing of the form ``(tau, 2^k)``.
    """
    k_min, k_max = level_window(g0, pad)
    ks = np.arange(k_max, k_min - 1, -1)
    taus = np.asarray(g0.inverse(np.ldexp(1.0, ks)), dtype=float)
    if not taus[0] > 1e-300:
        raise OverflowError("level window reaches below the smallest representable abscissa")
    knots = []
    for k, tau in zip(ks, taus):
        if knots and tau <= knots[-1][0]:
            continue
        knots.append((float(tau), math.ldexp(1.0, int(k))))
    (t0, y0), (t1, y1) = knots[0], knots[-1]
    a, b = g0.near.exponent, g0.far.exponent
    near = PowerTail(y0 * t0 ** a, a, side="near", dyadic=True)
    far = PowerTail(y1 * t1 ** b, b, side="far", dyadic=True)
    return TailedDecreasingFunction.from_knots(knots, near, far)


def psi_from_g(g: TailedDecreasingFunction, e: Exponents) -> ConstructedPsi:
    return ConstructedPsi(g, e)


# ---------------------------------------------------------------------------
# diagnostics


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    measured: float
    detail: str = ""


@dataclass(frozen=True)
class ConstructionResult:
    exponents: Exponents
    cushion: CushionParams
    g0: TailedDecreasingFunction
    g: TailedDecreasingFunction
    psi: ConstructedPsi
    window: tuple
    K: float
    M_f: float
    M_g: float
    M_half: float
    J_f: float
    J_g0: float
    J_g: float
    K_end: str | None
    M_f_end: str | None
    diagnostics: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.diagnostics)

    def check(self, name: str) -> Check:
        for c in self.diagnostics:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def identity_K_residual(self) -> float:
        return abs(self.K - self.J_g / self.exponents.p) / self.K

    @property
    def identity_M_residual(self) -> float:
        return abs(self.M_g - self.J_g) / self.J_g


def _sample_logs(g, rng, n=1000, spread=60.0):
    lo, hi = math.log(g.t_lo), math.log(g.t_hi)
    return np.sort(rng.uniform(lo - spread, hi + spread, n))


def _check_cover(f2, g0, xs):
    t = np.exp(xs)
    t = np.concatenate([t, [hi for _, hi, _ in f2.steps()]])
    gap = np.min(g0(t) - f2(t))
    return Check("g0 > f", bool(gap > 0.0), float(gap), "min of g0 - f at samples and breakpoints")


def _check_bracket(f2, g0, g, xs):
    # global lower half: g >= g0 / 2, in logs to cover far tails
    low = float(np.min(g.log_eval(xs) - g0.log_eval(xs) + math.log(2.0)))
    lower = Check("g > g0/2", low > -1e-12, low, "min of log(2 g / g0) over samples")
    # two-sided on core pieces spanning one level with no jump of f nearby
    bps = np.array([hi for _, hi, _ in f2.steps()])
    worst = 0.0
    pts = []
    for pc in g.core:
        if pc.y_lo != 2.0 * pc.y_hi:
            continue
        if np.any((bps >= pc.lo) & (bps <= pc.hi)):
            continue
        pts.append(pc.lo + (pc.hi - pc.lo) * np.array([0.1, 0.5, 0.9]))
    if pts:
        t = np.concatenate(pts)
        ratio = g(t) / g0(t)
        worst = float(max(np.max(ratio) / 2.0, 0.5 / np.min(ratio)))
    upper = Check(
        "g0/2 < g < 2 g0 on core", worst < 1.0, worst, "max of g/(2 g0) and g0/(2 g) away from jumps"
    )
    return lower, upper


def _check_decay(g, e: Exponents):
    """Boundary terms of the integration by parts vanish.

    ``h(t) = g(t)^r t^(r/p)`` is dominated by an envelope that decreases
    along the dyadic sequences: ``(r/p) int_0^eps g^r t^(r/p-1)`` as
    ``eps -> 0`` and ``c int_{N/2}^inf g^r t^(r/p-1)`` as ``N -> inf``.
    """
    r, w = e.r, e.lorentz_weight
    js = np.arange(1, DECAY_DOUBLINGS + 1)
    n = DECAY_DOUBLINGS
    # integrals over the dyadic bins [2^i, 2^(i+1)], i = -n .. n-1, in one batch
    bins = _dyadic_bin_integrals(g, r, w, -n, n)
    below = integrate_power(g, r, w, Interval(0.0, math.ldexp(1.0, -n))).value
    above = integrate_power(g, r, w, Interval(math.ldexp(1.0, n), math.inf)).value

    def piece(lo, hi):
        i = math.frexp(lo)[1] - 1
        return bins[i + n]

    # near: eps_j = 2^-j
    eps = np.ldexp(1.0, -js)
    inc = [piece(eps[j + 1], eps[j]) for j in range(len(eps) - 1)]
    rest = below
    env = (r / e.p) * (rest + np.concatenate([np.cumsum(inc[::-1])[::-1], [0.0]]))
    h = np.exp(r * g.log_eval(np.log(eps)) + (r / e.p) * np.log(eps))
    ok = bool(np.all(h <= env * (1 + 1e-9)) and np.all(np.diff(env) <= 0.0) and env[-1] < env[0])
    near = Check("decay at 0", ok, float(env[-1] / env[0]), "envelope ratio over 40 halvings")
    # far: N_j = 2^j
    N = np.ldexp(1.0, js)
    c = (r / e.p) / (1.0 - 2.0 ** (-r / e.p))
    edges = np.concatenate([[1.0], N])
    inc = [piece(edges[j], edges[j + 1]) for j in range(len(edges) - 1)]
    rest = above
    tails = rest + np.cumsum(inc[::-1])[::-1]
    env = c * tails
    window = c * np.array(inc)
    h = np.exp(r * g.log_eval(np.log(N)) + (r / e.p) * np.log(N))
    ok = bool(np.all(h <= window * (1 + 1e-9)) and np.all(np.diff(env) <= 0.0) and env[-1] < env[0])
    far = Check("decay at infinity", ok, float(env[-1] / env[0]), "envelope ratio over 40 doublings")
    return near, far


def _t_kinks(g, lo, hi):
    """Abscissae in ``(lo, hi)`` where ``g`` is not smooth."""
    ks = [t for t, _ in g.knots() if lo < t < hi]
    for tail, anchor, sign in ((g.near, g.t_lo, -1), (g.far, g.t_hi, +1)):
        if not tail.dyadic:
            continue
        lnr = math.log(tail.level_ratio)
        edge = lo if sign < 0 else hi
        j_max = math.floor(sign * (math.log(edge) - math.log(anchor)) / lnr)
        ks += [anchor * math.exp(sign * j * lnr) for j in range(1, j_max + 1)]
    return sorted(t for t in ks if lo < t < hi)


def _dyadic_bin_integrals(g, rho, alpha, i_lo, i_hi):
    """``int g^rho t^alpha`` over ``[2^i, 2^(i+1)]`` for ``i_lo <= i < i_hi``."""
    edges = np.ldexp(1.0, np.arange(i_lo, i_hi + 1))
    nodes = np.array(sorted(set(edges) | set(_t_kinks(g, edges[0], edges[-1]))))
    x = np.log(nodes)

    def logf(u):
        return rho * g.log_eval(u) + (alpha + 1.0) * u

    vals = log_quad(logf, x[:-1], x[1:])
    owner = np.searchsorted(edges, nodes[:-1], side="right") - 1
    return np.bincount(owner, weights=vals, minlength=len(edges) - 1)


def _check_composition(g, psi, e: Exponents, xs, rng):
    """Composition identities at sampled ``t``.

    ``Psi(g(t))`` is evaluated from the rounded value ``g(t)``; inside a
    nearly flat piece of ``g`` that value pins ``t`` down only up to the
    conditioning of ``g^{-1}``.  The identities are therefore scored by
    backward error: ``Psi`` and ``phi`` at ``g(t)`` must equal the formulas at
    an abscissa ``t*`` whose value ``g(t*)`` matches ``g(t)`` to the tolerance.
    The forward residual is reported alongside.
    """
    r, w = e.r, e.lorentz_weight
    lg = g.log_eval(xs)
    lt = g.log_inverse(lg)
    back = float(np.max(np.abs(np.expm1(g.log_eval(lt) - lg))))
    res16 = np.abs(np.expm1(psi.log(lg) - (r * lg + w * lt)))
    res18 = np.abs(np.expm1(np.log(psi.phi(np.exp(lg))) - w * lt))
    fwd = float(np.max(np.abs(np.expm1(w * (lt - xs)))))
    err_psi = max(back, float(np.max(res16)))
    err_phi = max(back, float(np.max(res18)))
    note = f"max backward residual; forward residual {fwd:.3g}"
    c_psi = Check("Psi(g(t)) = g^r t^(r/p-1)", err_psi <= COMPOSITION_RTOL, err_psi, note)
    c_phi = Check("phi(g(t)) = t^(r/p-1)", err_phi <= COMPOSITION_RTOL, err_phi, note)
    # monotonicity of Psi and Psi/s^r on random pairs
    ls = np.sort(rng.uniform(np.min(lg), np.max(lg), (1000, 2)), axis=1)
    lp = psi.log(ls)
    d_psi = lp[:, 1] - lp[:, 0]
    d_phi = d_psi - r * (ls[:, 1] - ls[:, 0])
    worst = float(min(np.min(d_psi), np.min(d_phi)))
    c_mono = Check("Psi and Psi/s^r nondecreasing", worst >= -1e-12, worst, "min log increment on pairs")
    return c_psi, c_mono, c_phi


def construct_psi(f: StepFunction, e: Exponents, pad: int = DEFAULT_PAD) -> ConstructionResult:
    """Run the pipeline on ``2f`` and check every step."""
    f2 = f.scaled(2.0)
    cushion = make_cushion(f2, e)
    g0 = build_g0(f2, cushion)
    g = build_g(g0, pad)
    psi = psi_from_g(g, e)
    k_min, k_max = level_window(g0, pad)

    Kv = condition3_integral(psi, e)
    Mf = orlicz_modular(psi, f)
    Mg = orlicz_modular(psi, g)
    Mh = orlicz_modular(psi, g0.scaled(0.5))
    J_f = lorentz_functional(f, e).value
    J_f2 = lorentz_functional(f2, e).value
    J_g0 = lorentz_functional(g0, e).value
    J_g = lorentz_functional(g, e).value

    rng = np.random.default_rng(_SEED)
    xs = _sample_logs(g, rng)
    checks = [_check_cover(f2, g0, xs)]
    factor = max(2.0, 2.0 ** e.r)
    checks.append(
        Check("J(g0) <= max(2,2^r) J(f)", J_g0 <= factor * J_f2 * (1 + 1e-8), J_g0 / (factor * J_f2))
    )
    checks.extend(_check_bracket(f2, g0, g, xs))
    checks.extend(_check_decay(g, e))
    checks.extend(_check_composition(g, psi, e, xs, rng))
    checks.append(Check("K finite", Kv.finite, Kv.value))
    checks.append(Check("M_f finite", Mf.finite, Mf.value))
    if Kv.finite and Mg.finite:
        rk = abs(Kv.value - J_g / e.p) / Kv.value
        rm = abs(Mg.value - J_g) / J_g
    else:
        rk = rm = math.inf
    checks.append(Check("K = J(g)/p", rk <= IDENTITY_K_RTOL, rk, "relative residual"))
    checks.append(Check("M_g = J(g)", rm <= IDENTITY_M_RTOL, rm, "relative residual"))
    chain = Mf.value <= Mh.value * (1 + 1e-9) and Mh.value <= Mg.value * (1 + 1e-9)
    checks.append(Check("M_f <= M(g0/2) <= M_g", bool(chain), Mh.value, "modular of g0/2"))

    return ConstructionResult(
        exponents=e,
        cushion=cushion,
        g0=g0,
        g=g,
        psi=psi,
        window=(k_min, k_max),
        K=Kv.value,
        M_f=Mf.value,
        M_g=Mg.value,
        M_half=Mh.value,
        J_f=J_f,
        J_g0=J_g0,
        J_g=J_g,
        K_end=Kv.end,
        M_f_end=Mf.end,
        diagnostics=tuple(checks),
    )


# ---------------------------------------------------------------------------
# convex regularisation


@dataclass(frozen=True)
class ConvexifiedPsi:
    """``Psi0(t) = int_0^t Psi(s)/s ds``; convex because ``Psi(s)/s`` is nondecreasing."""

    psi: object
    rtol: float = 1e-10

    def _segments(self, lo, hi):
        nodes = {lo, hi, *self.psi.kinks(lo, hi)}
        nodes = np.array(sorted(nodes))
        # break kink-free stretches into factor-2 pieces
        out = [nodes[0]]
        for x0, x1 in zip(nodes, nodes[1:]):
            n = max(1, math.ceil(math.log2(x1 / x0)))
            out.extend(np.geomspace(x0, x1, n + 1)[1:])
        out[-1] = hi
        return np.array(out)

    def _logf(self, x):
        return self.psi.log(x)

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        flat = arr.ravel()
        res = np.zeros_like(flat)
        pos = flat > 0.0
        if np.any(pos):
            vals = flat[pos]
            lo, hi = float(vals.min()), float(vals.max())
            base = psi_power_integral(self.psi, -1.0, 1.0, 0.0, lo).value
            nodes = self._segments(lo, hi)
            if len(nodes) > 1:
                seg = log_quad(self._logf, np.log(nodes[:-1]), np.log(nodes[1:]), rtol=self.rtol)
                cum = base + np.concatenate([[0.0], np.cumsum(seg)])
            else:
                cum = np.array([base])
            idx = np.clip(np.searchsorted(nodes, vals, side="right") - 1, 0, len(nodes) - 1)
            part = log_quad(self._logf, np.log(nodes[idx]), np.log(vals), rtol=self.rtol)
            res[pos] = cum[idx] + part
        out = res.reshape(arr.shape)
        return float(out) if out.ndim == 0 else out


def convexify(psi, exponents: Exponents | None = None) -> ConvexifiedPsi:
    """Convex ``Psi0`` with ``Psi0(t) <= Psi(t) <= Psi0(2t)``; needs ``r = 1``.

    A constructed ``Psi`` carries its exponents; for a piecewise power the
    requirement is that ``Psi(s)/s`` is nondecreasing.
    """
    if isinstance(psi, ConstructedPsi):
        exponents = psi.exponents
    if exponents is not None:
        if exponents.r != 1.0:
            raise ValueError(f"convexification needs r = 1, got r = {exponents.r!r}")
    elif isinstance(psi, PiecewisePowerPsi):
        if any(pc.exponent < 1.0 for pc in psi.pieces):
            raise ValueError("Psi(s)/s must be nondecreasing")
    else:
        raise ValueError("exponents are required to convexify this Psi")
    return ConvexifiedPsi(psi)
