import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from lorentz_orlicz import (
    Interval,
    LinearPiece,
    NotMonotone,
    PowerPiece,
    PowerTail,
    RangeViolation,
    StepFunction,
    TailedDecreasingFunction,
    evaluate,
    integrate_power,
    invert,
    make_exponents,
)
from lorentz_orlicz.construct import build_g0, make_cushion

from conftest import random_exponents, random_step


def matched(knots, a, b, dyadic=False):
    """Tailed function through ``knots`` with power tails continuous at both junctions."""
    (t0, y0), (t1, y1) = knots[0], knots[-1]
    near = PowerTail(y0 * t0**a, a, side="near", dyadic=dyadic)
    far = PowerTail(y1 * t1**b, b, side="far", dyadic=dyadic)
    return TailedDecreasingFunction.from_knots(knots, near, far)


def random_tailed(seed, dyadic=False):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 12))
    ts = np.cumsum(np.exp(rng.uniform(-3, 2, n)))
    ys = np.cumsum(np.exp(rng.uniform(-3, 2, n)))[::-1]
    return matched(list(zip(ts, ys)), rng.uniform(0.1, 3.0), rng.uniform(0.1, 3.0), dyadic)


def random_g0(seed):
    rng = np.random.default_rng(seed)
    f, e = random_step(rng, max_steps=10), random_exponents(rng)
    return build_g0(f, make_cushion(f, e)), e


# -- exponents ---------------------------------------------------------------


def test_exponents_examples():
    assert make_exponents(2, 1).q == 2.0
    assert make_exponents(3, 1).q == pytest.approx(1.5, rel=1e-15)


@pytest.mark.parametrize(
    "p,r,bound", [(2, 2, "r < p"), (1, 0.5, "p > 1"), (0.5, 0.2, "p > 1"), (2, 0, "r > 0"), (3, 4, "r < p")]
)
def test_exponents_reject_naming_bound(p, r, bound):
    with pytest.raises(RangeViolation, match=bound):
        make_exponents(p, r)


@given(st.floats(1.0001, 50.0), st.floats(0.001, 0.999))
def test_exponent_conjugacy(p, frac):
    e = make_exponents(p, frac * p)
    assert abs(e.r / e.p + e.r / e.q - 1.0) < 4e-15
    assert e.q > 0


# -- evaluation and inversion -------------------------------------------------


def test_step_half_open_convention():
    f = StepFunction((1.0,), (1.0,))
    assert evaluate(f, 1.0) == 1.0
    assert evaluate(f, 1.5) == 0.0
    assert evaluate(f, 1e-300) == 1.0


def test_evaluate_rejects_nonpositive():
    with pytest.raises(ValueError):
        evaluate(StepFunction((1.0,), (1.0,)), 0.0)


def test_step_rejects_increasing_values():
    with pytest.raises(NotMonotone):
        StepFunction((1.0, 2.0), (1.0, 2.0))


def test_far_tail_evaluation_and_inversion():
    fn = matched([(0.5, 2.0), (1.0, 1.0)], 1.0, 1.0)
    assert fn.far.coeff == 1.0
    assert evaluate(fn, 10.0) == pytest.approx(0.1, rel=1e-15)
    assert invert(fn, 0.1) == pytest.approx(10.0, rel=1e-15)


def test_linear_core_midpoint_inversion():
    fn = matched([(1.0, 2.0), (2.0, 1.0)], 1.0, 1.0)
    assert invert(fn, 1.5) == 1.5
    assert evaluate(fn, 1.5) == 1.5


def test_tailed_rejects_increase():
    with pytest.raises(NotMonotone):
        TailedDecreasingFunction(
            PowerTail(1.0, 1.0, side="near"),
            PowerTail(5.0, 1.0, side="far"),
            (1.0, 2.0),
            (LinearPiece(1.0, 2.0, 1.0, 0.5),),
        )


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_tailed_strictly_decreasing(seed, dyadic):
    fn = random_tailed(seed, dyadic)
    t = np.sort(np.exp(np.random.default_rng(seed).uniform(-8, 8, 400)))
    t = np.unique(t)
    v = fn(t)
    assert np.all(np.diff(v) < 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_step_evaluation_nonincreasing(seed):
    rng = np.random.default_rng(seed)
    f = random_step(rng)
    t = np.sort(np.exp(rng.uniform(-6, 6, 300)))
    assert np.all(np.diff(f(t)) <= 0)


def log_slope(fn, t, h=1e-5):
    return (np.log(fn(t * math.exp(h))) - np.log(fn(t * math.exp(-h)))) / (2 * h)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["linear", "dyadic", "g0"]))
def test_inversion_round_trip(seed, kind):
    # fl(fn(t)) alone moves t by cond * eps with cond = |fn / (t fn')|, so the
    # round trip is held to 1e-12 or a small multiple of that, whichever is larger
    fn = random_g0(seed)[0] if kind == "g0" else random_tailed(seed, kind == "dyadic")
    t = np.exp(np.random.default_rng(seed).uniform(-10, 10, 1000))
    y = evaluate(fn, t)
    back = invert(fn, y)
    cond = 1.0 / np.abs(log_slope(fn, t))
    err = np.abs(back / t - 1.0)
    assert np.all(err <= np.maximum(1e-12, 64 * np.finfo(float).eps * cond))
    assert np.max(np.abs(fn(back) / y - 1.0)) <= 1e-14


@pytest.mark.parametrize("a,b", [(0.5, 1.0), (2.0, 3.0), (0.25, 0.75)])
def test_inversion_round_trip_well_conditioned(a, b):
    ts = np.geomspace(0.1, 50.0, 12)
    fn = matched(list(zip(ts, 100.0 / ts)), a, b, dyadic=a == 2.0)
    t = np.exp(np.random.default_rng(0).uniform(-10, 10, 1000))
    assert np.max(np.abs(invert(fn, evaluate(fn, t)) / t - 1.0)) <= 1e-12


# -- integration --------------------------------------------------------------


def test_integrate_constant_weighted():
    f = StepFunction((1.0,), (1.0,))
    assert integrate_power(f, 1.0, -0.5).value == pytest.approx(2.0, rel=1e-15)


def test_harmonic_far_tail_divergent():
    fn = matched([(0.5, 2.0), (1.0, 1.0)], 1.0, 1.0)
    res = integrate_power(fn, 1.0, 0.0, Interval(1.0, math.inf))
    assert not res.finite and res.end == "infinity"
    assert math.isinf(res.value)


def test_linear_piece_against_simpson():
    fn = matched([(1.0, 2.0), (2.0, 1.0)], 1.0, 1.0)
    got = integrate_power(fn, 2.0, 0.0, Interval(1.0, 2.0)).value
    # composite Simpson refinement until it stops moving
    prev, n = None, 8
    while True:
        t = np.linspace(1.0, 2.0, n + 1)
        s = integrate.simpson((3.0 - t) ** 2, x=t)
        if prev is not None and abs(s - prev) < 1e-15:
            break
        prev, n = s, 2 * n
    assert got == pytest.approx(s, rel=1e-8)
    assert got == pytest.approx(7.0 / 3.0, rel=1e-12)


def test_breakdown_sums_to_value():
    fn, e = random_g0(3)
    res = integrate_power(fn, e.r, e.lorentz_weight)
    assert res.finite
    assert sum(v for _, v in res.breakdown) == pytest.approx(res.value, rel=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["linear", "dyadic", "g0", "step"]))
def test_integration_additivity(seed, kind):
    rng = np.random.default_rng(seed)
    if kind == "g0":
        fn, e = random_g0(seed)
    elif kind == "step":
        fn, e = random_step(rng), random_exponents(rng)
    else:
        fn, e = random_tailed(seed, kind == "dyadic"), random_exponents(rng)
    rho, alpha = e.r, e.lorentz_weight
    a, b, c = np.sort(np.exp(rng.uniform(-6, 6, 3)))
    left = integrate_power(fn, rho, alpha, Interval(a, b)).value
    right = integrate_power(fn, rho, alpha, Interval(b, c)).value
    whole = integrate_power(fn, rho, alpha, Interval(a, c)).value
    assert left + right == pytest.approx(whole, rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(
    st.floats(0.5, 4.0),
    st.floats(0.1, 3.0),
    st.floats(0.2, 3.0),
    st.floats(-2.5, 1.5),
    st.floats(0.0, 2.0),
)
def test_power_piece_closed_form_matches_quadrature(coeff, exponent, rho, alpha, shift):
    lo, hi = 0.5, 3.0
    y_lo = shift + coeff * lo**-exponent
    y_hi = shift + coeff * hi**-exponent
    near = PowerTail(y_lo * lo, 1.0, side="near")
    far = PowerTail(y_hi * hi, 1.0, side="far")
    fn = TailedDecreasingFunction(near, far, (lo, hi), (PowerPiece(lo, hi, shift, coeff, exponent),))
    got = integrate_power(fn, rho, alpha, Interval(lo, hi)).value
    ref, _ = integrate.quad(lambda t: (shift + coeff * t**-exponent) ** rho * t**alpha, lo, hi, epsabs=0, epsrel=1e-13)
    assert got == pytest.approx(ref, rel=1e-8)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_tail_integrals_match_quadrature(seed):
    fn = random_tailed(seed, dyadic=seed % 2 == 0)
    rng = np.random.default_rng(seed)
    e = random_exponents(rng)
    res = integrate_power(fn, e.r, e.lorentz_weight, Interval(fn.t_hi, fn.t_hi * 64))
    ref, _ = integrate.quad(
        lambda u: fn(math.exp(u)) ** e.r * math.exp((e.lorentz_weight + 1) * u),
        math.log(fn.t_hi),
        math.log(fn.t_hi * 64),
        limit=400,
        epsabs=0,
        epsrel=1e-12,
        points=[math.log(fn.t_hi) + k * math.log(fn.far.level_ratio) for k in range(1, 40) if fn.far.level_ratio ** k < 64],
    )
    assert res.value == pytest.approx(ref, rel=1e-8)
