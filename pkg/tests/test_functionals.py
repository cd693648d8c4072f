import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from lorentz_orlicz import (
    Interval,
    PiecewisePowerPsi,
    PsiPiece,
    StepFunction,
    calderon_condition,
    condition3_integral,
    construct_psi,
    lorentz_functional,
    make_exponents,
    orlicz_modular,
    power_psi,
    psi_power_integral,
    two_power_psi,
)
from lorentz_orlicz.functionals import calderon_integrand, condition3_integrand

from conftest import random_exponents, random_step

ONE = StepFunction((1.0,), (1.0,))
E21 = make_exponents(2, 1)


@pytest.fixture(scope="module")
def unit_construction():
    return construct_psi(ONE, E21)


def random_psi(rng):
    """Nondecreasing piecewise power with 1-4 pieces, continuous at the kinks."""
    n = int(rng.integers(1, 5))
    kinks = np.sort(np.exp(rng.uniform(-3, 3, n - 1)))
    exps = rng.uniform(0.3, 6.0, n)
    pieces, coeff, lo = [], 1.0, 0.0
    for i in range(n):
        hi = kinks[i] if i < n - 1 else math.inf
        pieces.append(PsiPiece(lo, hi, coeff, exps[i]))
        if i < n - 1:
            coeff = coeff * hi ** exps[i] / hi ** exps[i + 1]
        lo = hi
    return PiecewisePowerPsi(tuple(pieces))


# -- J ----------------------------------------------------------------------------


def test_lorentz_examples():
    assert lorentz_functional(ONE, E21).value == 2.0
    assert lorentz_functional(StepFunction((4.0,), (2.0,)), E21).value == 8.0
    assert lorentz_functional(StepFunction(), E21).value == 0.0


def test_lorentz_closed_form_per_step():
    f = StepFunction((1.0, 3.0, 4.0), (5.0, 2.0, 0.5))
    e = make_exponents(3.0, 1.5)
    expected = sum(e.p / e.r * v**e.r * (b ** (e.r / e.p) - a ** (e.r / e.p)) for a, b, v in f.steps())
    assert lorentz_functional(f, e).value == pytest.approx(expected, rel=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
def test_lorentz_scaling_covariance(seed, c):
    rng = np.random.default_rng(seed)
    f, e = random_step(rng), random_exponents(rng, p_range=(1.05, 10.0))
    assert lorentz_functional(f.scaled(c), e).value == pytest.approx(c**e.r * lorentz_functional(f, e).value, rel=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
def test_lorentz_dilation_covariance(seed, lam):
    rng = np.random.default_rng(seed)
    f, e = random_step(rng), random_exponents(rng, p_range=(1.05, 10.0))
    dilated = StepFunction(tuple(lam * b for b in f.breakpoints), f.values)
    got = lorentz_functional(dilated, e).value
    assert got == pytest.approx(lam ** (e.r / e.p) * lorentz_functional(f, e).value, rel=1e-10)


# -- M ----------------------------------------------------------------------------


def test_modular_examples():
    sq = power_psi(2.0)
    assert orlicz_modular(sq, ONE).value == 1.0
    assert orlicz_modular(sq, StepFunction((2.0,), (3.0,))).value == 18.0


def test_modular_on_interval():
    f = StepFunction((1.0, 3.0), (2.0, 1.0))
    assert orlicz_modular(power_psi(2.0), f, Interval(0.5, 2.0)).value == 4 * 0.5 + 1 * 1.0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_modular_monotone_in_f(seed):
    rng = np.random.default_rng(seed)
    f = random_step(rng, max_steps=20)
    psi = random_psi(rng)
    # a pointwise larger step function: raise all values, stretch the last step
    bp = list(f.breakpoints)
    bp[-1] *= rng.uniform(1.0, 2.0)
    bigger = StepFunction(tuple(bp), f.scaled(rng.uniform(1.0, 1.5)).values)
    grid = np.exp(np.linspace(-8, 6, 400))
    assert np.all(bigger(grid) >= f(grid))
    assert orlicz_modular(psi, f).value <= orlicz_modular(psi, bigger).value * (1 + 1e-14)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_modular_step_is_exact_sum(seed):
    rng = np.random.default_rng(seed)
    f, psi = random_step(rng, max_steps=20), random_psi(rng)
    expected = math.fsum(psi(v) * (b - a) for a, b, v in f.steps())
    assert orlicz_modular(psi, f).value == pytest.approx(expected, rel=1e-13)


def test_modular_of_g_equals_lorentz_of_g(unit_construction):
    res = unit_construction
    assert orlicz_modular(res.psi, res.g).value == pytest.approx(lorentz_functional(res.g, E21).value, rel=1e-8)


# -- K ----------------------------------------------------------------------------


def test_condition3_power_psi_divergent_both_ends():
    for p, r in [(2, 1), (3, 0.5), (7, 6.5)]:
        K = condition3_integral(power_psi(p), make_exponents(p, r))
        assert not K.finite and K.end == "both"


def test_condition3_two_power_example():
    K = condition3_integral(two_power_psi(2.0, 1.0), E21)
    assert K.value == 2.0
    assert dict(K.breakdown) == {"(0,1]": 1.0, "[1,inf)": 1.0}


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 1.0))
def test_condition3_two_power_closed_form(seed, frac):
    e = random_exponents(np.random.default_rng(seed), p_range=(1.05, 10.0))
    eps = frac * e.p
    K = condition3_integral(two_power_psi(e.p, eps), e)
    assert K.value == pytest.approx(2 * e.p / (e.q * eps), rel=1e-13)


def test_condition3_reports_failing_end():
    e = E21
    slow = condition3_integral(power_psi(1.5), e)  # t^{q-1-(3/2)} = t^{-1/2}: fine at 0, diverges at infinity
    assert slow.end == "infinity"
    fast = condition3_integral(power_psi(2.5), e)
    assert fast.end == "zero"


def test_condition3_constructed_identity(unit_construction):
    res = unit_construction
    K = condition3_integral(res.psi, E21)
    assert K.finite
    assert K.value == pytest.approx(lorentz_functional(res.g, E21).value / 2.0, rel=1e-6)


def test_constructed_psi_power_integral_matches_quadrature(unit_construction):
    psi = unit_construction.psi
    lo, hi = 0.3, 40.0
    got = psi_power_integral(psi, 1.0, -0.5, lo, hi).value
    kinks = [k for k in psi.kinks(lo, hi)]
    ref, _ = integrate.quad(lambda s: s * psi(s) ** -0.5, lo, hi, points=kinks[:90], limit=500, epsabs=0, epsrel=1e-12)
    assert got == pytest.approx(ref, rel=1e-8)


def test_psi_rejects_bad_pieces():
    with pytest.raises(ValueError):
        PiecewisePowerPsi((PsiPiece(0.0, 1.0, 1.0, 2.0), PsiPiece(1.0, math.inf, 0.5, 2.0)))
    with pytest.raises(ValueError):
        PiecewisePowerPsi((PsiPiece(0.0, math.inf, 0.0, 2.0),))
    with pytest.raises(ValueError):
        PiecewisePowerPsi((PsiPiece(1.0, math.inf, 1.0, 2.0),))


# -- Calderon ------------------------------------------------------------------------


def test_calderon_examples():
    assert calderon_condition(power_psi(3.0), 2).value == pytest.approx(1.0, rel=1e-15)
    div = calderon_condition(power_psi(2.0), 2)
    assert not div.finite and div.end == "infinity"
    with pytest.raises(ValueError):
        calderon_condition(power_psi(3.0), 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8))
def test_calderon_matches_condition3_tail(seed, n):
    psi = random_psi(np.random.default_rng(seed))
    val = calderon_condition(psi, n)
    tail = val.condition3_tail
    assert val.finite == tail.finite
    if val.finite:
        assert val.value == pytest.approx(tail.value, rel=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8))
def test_calderon_integrands_pointwise_equal(seed, n):
    rng = np.random.default_rng(seed)
    psi = random_psi(rng)
    e = make_exponents(n, 1.0)
    t = np.exp(rng.uniform(0.0, 8.0, 100))
    a = calderon_integrand(psi, n, t)
    b = condition3_integrand(psi, e, t)
    assert np.allclose(a, b, rtol=1e-13, atol=0)


def test_calderon_integrands_bitwise_equal_for_n2():
    # at n = 2 every exponent is exactly 1, so the two formulas coincide bit for bit
    psi = two_power_psi(2.0, 0.5)
    e = make_exponents(2, 1)
    t = np.exp(np.random.default_rng(1).uniform(0.0, 8.0, 100))
    assert np.array_equal(calderon_integrand(psi, 2, t), condition3_integrand(psi, e, t))
