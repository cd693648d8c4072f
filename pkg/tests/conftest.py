import numpy as np
import pytest

from lorentz_orlicz import StepFunction, make_exponents


def random_step(rng, max_steps=50, spread=5.0, width_range=(-4.0, 3.0)):
    n = int(rng.integers(1, max_steps + 1))
    vals = np.sort(np.exp(rng.uniform(-spread, spread, n)))[::-1]
    widths = np.exp(rng.uniform(*width_range, n))
    return StepFunction(tuple(np.cumsum(widths)), tuple(vals))


def random_exponents(rng, p_range=(1.1, 6.0), r_frac=(0.05, 0.95)):
    p = rng.uniform(*p_range)
    return make_exponents(p, rng.uniform(*r_frac) * p)


def random_construct_case(rng):
    """A random step function with random exponents, as fed to the construction."""
    e = random_exponents(rng)
    return random_step(rng), e


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
