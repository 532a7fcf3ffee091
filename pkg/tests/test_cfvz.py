import random
from math import lcm

import pytest
from hypothesis import given, settings, strategies as st

from cfvz_lab.cfvz import (
    BlockElement,
    ParameterError,
    PointMatrix,
    apply_to_generator,
    block_identity,
    block_mul,
    block_pow,
    c_m,
    corner_operator,
    pi_m,
    random_block_element,
    random_matrix,
    run_key_exchange,
)
from cfvz_lab.curve import OpCounter
from cfvz_lab.modring import DimensionError, ZnMatrix

dims = st.tuples(st.integers(1, 3), st.integers(1, 3))


def _residue_element(n, r, s, rng):
    return BlockElement(random_matrix(r, r, n, rng), random_matrix(r, s, n, rng), random_matrix(s, s, n, rng))


def _naive_pow(X, m):
    out = block_identity(X)
    for _ in range(m):
        out = block_mul(out, X)
    return out


def test_product_rule():
    n = 97
    X = BlockElement(ZnMatrix([[2]], n), ZnMatrix([[3, 4]], n), ZnMatrix([[1, 0], [5, 6]], n))
    Y = BlockElement(ZnMatrix([[7]], n), ZnMatrix([[8, 9]], n), ZnMatrix([[2, 1], [0, 3]], n))
    Z = block_mul(X, Y)
    assert Z.A == X.A @ Y.A
    assert Z.B == X.B @ Y.B
    assert Z.block == X.A @ Y.block + X.block @ Y.B


def test_shape_mismatch():
    n = 7
    X = BlockElement(ZnMatrix([[1]], n), ZnMatrix([[1]], n), ZnMatrix([[1]], n))
    Y = BlockElement(ZnMatrix([[1]], n), ZnMatrix([[1, 1]], n), ZnMatrix.identity(2, n))
    with pytest.raises(DimensionError):
        block_mul(X, Y)
    with pytest.raises(DimensionError):
        BlockElement(ZnMatrix([[1]], n), ZnMatrix([[1, 1]], n), ZnMatrix([[1]], n))


@settings(max_examples=60, deadline=None)
@given(dims, st.integers(0, 40), st.integers(0, 2**32))
def test_block_pow_matches_recurrence_and_naive_product(small_curve, rs, m, seed):
    rng = random.Random(seed)
    r, s = rs
    X = random_block_element(small_curve, r, s, rng, invertible=False)
    fast = block_pow(X, m)
    assert fast.block == pi_m(X, m)
    assert fast.block == _naive_pow(X, m).block
    assert fast.A == X.A**m and fast.B == X.B**m


@settings(max_examples=60, deadline=None)
@given(dims, st.integers(0, 10**9), st.integers(0, 2**32))
def test_lemma_corner_of_point_element(small_curve, rs, m, seed):
    # Pi_k = C_k P when Pi = C P.
    c = small_curve
    rng = random.Random(seed)
    r, s = rs
    R = _residue_element(c.n, r, s, rng)
    X = R.with_block(apply_to_generator(R.block, c.generator, c))
    assert block_pow(X, m).block == apply_to_generator(block_pow(R, m).block, c.generator, c)


@settings(max_examples=100, deadline=None)
@given(dims, st.integers(0, 30), st.integers(0, 30), st.integers(0, 2**32))
def test_lemma_distributivity_and_symmetry(rs, i, j, seed):
    n = 1009 * 4
    rng = random.Random(seed)
    r, s = rs
    A, B = random_matrix(r, r, n, rng), random_matrix(s, s, n, rng)
    U, V = random_matrix(r, s, n, rng), random_matrix(r, s, n, rng)
    corner = lambda W, m: c_m(BlockElement(A, W, B), m)
    assert corner(U + V, i) == corner(U, i) + corner(V, i)
    Aj, Bj = A**j, B**j
    assert corner(Aj @ U, i) == Aj @ corner(U, i)
    assert corner(U @ Bj, i) == corner(U, i) @ Bj
    assert corner(corner(U, i), j) == corner(corner(U, j), i)


def test_corner_operator_is_linear_map():
    rng = random.Random(3)
    n = 101
    A, B = random_matrix(2, 2, n, rng), random_matrix(3, 3, n, rng)
    U = random_matrix(2, 3, n, rng)
    K = corner_operator(A, B, 9)
    vec = (K @ ZnMatrix.column(U.flat(), n)).flat()
    assert vec == c_m(BlockElement(A, U, B), 9).flat()


def test_point_pow_is_cheaper_than_naive(small_curve):
    X = random_block_element(small_curve, 2, 2, random.Random(0))
    fast, slow = OpCounter(), OpCounter()
    block_pow(X, 500, fast)
    pi_m(X, 500, slow)
    assert fast.adds * 5 < slow.adds


def _order(X, limit):
    Y = X
    I = block_identity(X)
    for m in range(1, limit + 1):
        if Y.A == I.A and Y.B == I.B and Y.block == I.block:
            return m
        Y = block_mul(Y, X)
    raise AssertionError("order not found")


def _mat_order(M, limit):
    I = ZnMatrix.identity(M.rows, M.modulus)
    Y = M
    for m in range(1, limit + 1):
        if Y == I:
            return m
        Y = Y @ M
    raise AssertionError("order not found")


def test_order_of_block_element_divisibility():
    # ord(M) is a multiple of lcm(ord A, ord B) and divides n * lcm; it need not equal lcm.
    rng = random.Random(4)
    n = 7
    limit = 7 * 400
    for _ in range(40):
        A = ZnMatrix([[rng.randrange(1, n)]], n)
        B = ZnMatrix([[rng.randrange(1, n)]], n)
        X = BlockElement(A, ZnMatrix([[rng.randrange(n)]], n), B)
        L = lcm(_mat_order(A, limit), _mat_order(B, limit))
        o = _order(X, limit)
        assert o % L == 0 and (n * L) % o == 0


def test_order_exceeds_lcm_counterexample():
    n = 7
    one = ZnMatrix([[1]], n)
    X = BlockElement(one, ZnMatrix([[1]], n), one)
    assert _order(X, 100) == n  # lcm(ord A, ord B) = 1


@settings(max_examples=40, deadline=None)
@given(dims, st.integers(1, 10**6), st.integers(1, 10**6), st.integers(0, 2**32))
def test_key_exchange_agrees(small_curve, rs, k, l, seed):
    r, s = rs
    base = random_block_element(small_curve, r, s, random.Random(seed))
    tr = run_key_exchange(small_curve, base, k, l)
    assert tr.recompute()


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 60), st.integers(1, 60), st.integers(0, 2**32))
def test_shared_secret_matches_recurrence(small_curve, k, l, seed):
    base = random_block_element(small_curve, 2, 2, random.Random(seed))
    tr = run_key_exchange(small_curve, base, k, l)
    assert tr.shared == pi_m(base.with_block(pi_m(base, l)), k)


def test_key_exchange_rejects_singular(tiny_curve):
    n = tiny_curve.n
    Pi = PointMatrix.from_flat([tiny_curve.generator], 1, 1, tiny_curve)
    base = BlockElement(ZnMatrix([[0]], n), Pi, ZnMatrix([[1]], n))
    with pytest.raises(ParameterError):
        run_key_exchange(tiny_curve, base, 3, 4)
    ok = BlockElement(ZnMatrix([[2]], n), Pi, ZnMatrix([[1]], n))
    with pytest.raises(ParameterError):
        run_key_exchange(tiny_curve, ok, 0, 4)


def test_transcript_tamper_detected(small_curve):
    base = random_block_element(small_curve, 2, 2, random.Random(9))
    tr = run_key_exchange(small_curve, base, 123, 456)
    flat = list(tr.shared.flat())
    flat[0] = None if flat[0] is not None else small_curve.generator
    bad = type(tr)(tr.curve, tr.base, tr.alice_secret, tr.bob_secret, tr.alice_public, tr.bob_public,
                   PointMatrix.from_flat(flat, 2, 2, small_curve))
    assert not bad.recompute()
