import random

import pytest

from cfvz_lab.curve import make_curve_params, random_curve


@pytest.fixture(scope="session")
def tiny_curve():
    # y^2 = x^3 + 2x + 2 over F_17, cyclic of prime order 19.
    return make_curve_params(17, 2, 2, random.Random(1))


@pytest.fixture(scope="session")
def small_curve():
    return random_curve(random.Random(11), 900, 1100)


@pytest.fixture(scope="session")
def mid_curve():
    return random_curve(random.Random(12), 9000, 11000)


@pytest.fixture(scope="session")
def cofactor_curves():
    """Cyclic curves with n = l * p' for l = 2, 3, 4."""
    return {
        l: random_curve(random.Random(100 + l), 5000, 20000, max_cofactor=l, min_cofactor=l)
        for l in (2, 3, 4)
    }


@pytest.fixture(scope="session")
def curve_pool():
    """Prime-order curves spread over 10^3 <= n <= 10^6."""
    bands = [(1000, 3000), (10_000, 30_000), (100_000, 300_000), (700_000, 1_000_000)]
    return [random_curve(random.Random(7 + i), lo, hi) for i, (lo, hi) in enumerate(bands)]
