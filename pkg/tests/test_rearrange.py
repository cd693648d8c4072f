from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lorentz_orlicz import StepFunction, WeightedSamples, rearrange_grid, rearrange_samples


def exact_superlevel(entries, lam):
    return float(sum((Fraction(m) for v, m in entries if abs(v) > lam), Fraction(0)))


def exact_step_integral(f, phi):
    return sum(phi(Fraction(v)) * (Fraction(hi) - Fraction(lo)) for lo, hi, v in f.steps())


def superlevel_measure(f, lam):
    above = [hi for lo, hi, v in f.steps() if v > lam]
    return above[-1] if above else 0.0


def dyadic_samples(rng, n):
    values = rng.lognormal(0.0, 2.0, n) * rng.choice([-1.0, 1.0], n)
    values[rng.random(n) < 0.1] = 0.0
    # repeat some values to exercise tie merging
    ties = rng.random(n) < 0.2
    values[ties] = values[rng.integers(0, n, ties.sum())]
    measures = rng.integers(1, 4096, n) / 1024.0
    return list(zip(values.tolist(), measures.tolist()))


def test_sort_example():
    f = rearrange_samples(WeightedSamples.from_arrays([1, 3, 2], [1, 1, 1]))
    assert f == StepFunction((1.0, 2.0, 3.0), (3.0, 2.0, 1.0))


def test_ties_merge():
    f = rearrange_samples(WeightedSamples.from_arrays([2, 2], [1, 3]))
    assert f == StepFunction((4.0,), (2.0,))


def test_empty_is_zero_function():
    f = rearrange_samples(WeightedSamples())
    assert f.is_zero and f.breakpoints == ()


def test_grid_examples():
    assert rearrange_grid([0.5, 1.5], 2.0) == StepFunction((2.0, 4.0), (1.5, 0.5))
    assert rearrange_grid([-3.0], 1.0) == StepFunction((1.0,), (3.0,))


def test_zeros_dropped():
    f = rearrange_grid([0.0, 1.0, 0.0], 1.0)
    assert f == StepFunction((1.0,), (1.0,))


@pytest.mark.parametrize("m", [0.0, -1.0])
def test_nonpositive_measure_rejected(m):
    with pytest.raises(ValueError, match="entry 1"):
        WeightedSamples(((1.0, 1.0), (2.0, m)))
    with pytest.raises(ValueError):
        rearrange_grid([1.0], m)


def test_large_uniform_grid():
    rng = np.random.default_rng(5)
    vals = rng.uniform(0.0, 1.0, 10_000)
    f = rearrange_grid(vals, 1.0)
    assert f.support == 10_000.0
    assert all(a >= b for a, b in zip(f.values, f.values[1:]))
    assert list(f.values) == sorted(set(vals.tolist()), reverse=True)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 500))
def test_equimeasurability(seed, n):
    rng = np.random.default_rng(seed)
    entries = [(v, m) for v, m in zip(rng.normal(0, 3, n), np.exp(rng.uniform(-5, 5, n)))]
    f = rearrange_samples(WeightedSamples(tuple(entries)))
    lams = np.concatenate([rng.uniform(0, 8, 20), np.abs([v for v, _ in entries[:5]])])
    for lam in lams:
        assert superlevel_measure(f, lam) == exact_superlevel(entries, lam)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 500))
def test_sum_preservation(seed, n):
    rng = np.random.default_rng(seed)
    entries = dyadic_samples(rng, n)
    f = rearrange_samples(WeightedSamples(tuple(entries)))
    for phi in (lambda x: x, lambda x: x * x, lambda x: x**3 + 2 * x):
        direct = sum(phi(abs(Fraction(v))) * Fraction(m) for v, m in entries)
        assert exact_step_integral(f, phi) == direct


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_idempotence(seed):
    rng = np.random.default_rng(seed)
    f = rearrange_samples(WeightedSamples(tuple(dyadic_samples(rng, 50))))
    induced = WeightedSamples(tuple((v, hi - lo) for lo, hi, v in f.steps()))
    assert rearrange_samples(induced) == f


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    entries = dyadic_samples(rng, 80)
    perm = rng.permutation(len(entries))
    shuffled = [entries[i] for i in perm]
    assert rearrange_samples(WeightedSamples(tuple(entries))) == rearrange_samples(WeightedSamples(tuple(shuffled)))
