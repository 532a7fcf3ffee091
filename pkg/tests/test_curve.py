import random

import pytest
from hypothesis import given, settings, strategies as st

from cfvz_lab.curve import (
    CurveError,
    CurveParams,
    EllipticCurve,
    NotCyclicError,
    NotFoundError,
    OpCounter,
    dlp_bruteforce,
    find_cyclic_generator,
    group_order,
    is_on_curve,
    make_curve_params,
    multi_scalar_mul,
    point_add,
    point_neg,
    random_curve,
    random_point,
    scalar_mul,
)


def _naive_points(p, a, b):
    pts = [None]
    for x in range(p):
        for y in range(p):
            if (y * y - x**3 - a * x - b) % p == 0:
                pts.append((x, y))
    return pts


def test_textbook_curve():
    c = make_curve_params(17, 2, 2)
    assert (c.n, c.l, c.p_prime) == (19, 1, 19)
    assert point_add((5, 1), (5, 1), c) == (6, 3)


def test_order_of_cusp_free_small_curve():
    assert group_order(5, 0, 1).n == 6


@pytest.mark.parametrize("p", [5, 7, 11, 13, 17, 23, 29, 31])
def test_group_order_matches_enumeration(p):
    rng = random.Random(p)
    for _ in range(5):
        a, b = rng.randrange(p), rng.randrange(p)
        if (4 * a**3 + 27 * b**2) % p == 0:
            continue
        assert group_order(p, a, b).n == len(_naive_points(p, a, b))


def test_singular_curve_rejected():
    with pytest.raises(CurveError):
        EllipticCurve(7, 0, 0)
    with pytest.raises(CurveError):
        EllipticCurve(15, 1, 1)


def test_off_curve_point_rejected(tiny_curve):
    with pytest.raises(CurveError):
        point_add((0, 0), tiny_curve.generator, tiny_curve)


def test_bad_generator_rejected(tiny_curve):
    with pytest.raises(CurveError):
        CurveParams(17, 2, 2, n=19, l=1, p_prime=19, generator=(0, 0))
    with pytest.raises(CurveError):
        CurveParams(17, 2, 2, n=20, l=4, p_prime=5, generator=tiny_curve.generator)


def test_non_cyclic_group_has_no_generator():
    # y^2 = x^3 - x over F_p with p = 3 mod 4 has full 2-torsion, so E is Z/2 x Z/k with 2 | k.
    for p in (7, 11, 19, 23, 31, 43):
        curve = EllipticCurve(p, -1, 0)
        order = group_order(p, -1, 0)
        assert order.n % 4 == 0
        with pytest.raises(NotCyclicError):
            find_cyclic_generator(curve, order, random.Random(0), retries=200)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 10**6), st.integers(0, 10**6))
def test_group_axioms(tiny_curve, i, j, k):
    c = tiny_curve
    G = c.generator
    P, Q, R = (scalar_mul(t, G, c) for t in (i, j, k))
    assert point_add(P, Q, c) == point_add(Q, P, c)
    assert point_add(point_add(P, Q, c), R, c) == point_add(P, point_add(Q, R, c), c)
    assert point_add(P, None, c) == P
    assert point_add(P, point_neg(P, c), c) is None
    assert is_on_curve(point_add(P, Q, c), c)


def test_scalar_mul_matches_repeated_addition(small_curve):
    c = small_curve
    R = None
    for k in range(0, 300):
        assert scalar_mul(k, c.generator, c) == R
        R = point_add(R, c.generator, c)
    assert scalar_mul(c.n, c.generator, c) is None
    assert scalar_mul(-5, c.generator, c) == point_neg(scalar_mul(5, c.generator, c), c)


def test_counter_tallies(small_curve):
    cnt = OpCounter()
    scalar_mul(0b1011, small_curve.generator, small_curve, cnt)
    assert cnt.adds == 5  # three doublings, two additions


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(-10**6, 10**6), st.integers(0, 10**6)), min_size=1, max_size=6))
def test_multi_scalar_mul_matches_sum(small_curve, terms):
    c = small_curve
    pts = [scalar_mul(t, c.generator, c) for _, t in terms]
    ks = [k for k, _ in terms]
    expected = None
    for k, P in zip(ks, pts):
        expected = point_add(expected, scalar_mul(k, P, c), c)
    assert multi_scalar_mul(ks, pts, c) == expected


def test_dlp_bruteforce_roundtrip(small_curve):
    rng = random.Random(2)
    c = small_curve
    for _ in range(50):
        k = rng.randrange(c.n)
        assert dlp_bruteforce(scalar_mul(k, c.generator, c), c) == k
    assert dlp_bruteforce(None, c) == 0


def test_dlp_bruteforce_not_found(tiny_curve):
    with pytest.raises(NotFoundError):
        dlp_bruteforce((1, 1), tiny_curve)


def test_random_point_on_curve(small_curve):
    rng = random.Random(0)
    assert all(is_on_curve(random_point(small_curve, rng), small_curve) for _ in range(100))


@pytest.mark.parametrize("l", [1, 2, 3, 4])
def test_random_curve_shape(l):
    c = random_curve(random.Random(l), 2000, 8000, max_cofactor=l, min_cofactor=l)
    assert 2000 <= c.n <= 8000 and c.l == l and c.n == l * c.p_prime
    assert scalar_mul(c.n // c.p_prime, c.generator, c) is not None
    # Hasse bound
    assert abs(c.n - (c.p + 1)) <= 2 * c.p**0.5
