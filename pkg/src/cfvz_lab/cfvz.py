"""The semigroup of block matrices [A X; 0 B] and the key exchange built on it.

The corner block X is either a matrix of curve points or a matrix over
Z/nZ.  Both kinds go through the same multiplication code; only the action
of a residue matrix on the corner differs (matrix product vs. the scalar
action ``Q_ij = sum_k a_ik P_kj`` on points).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from math import gcd
from typing import Iterator, Optional, Sequence, Union

import numpy as np

from .curve import CurveParams, OpCounter, Point, _add, multi_scalar_mul, random_point, scalar_mul
from .modring import DimensionError, ZnMatrix, det_mod

__all__ = [
    "ParameterError",
    "ProtocolError",
    "PointMatrix",
    "BlockElement",
    "KeyExchangeTranscript",
    "block_mul",
    "block_identity",
    "block_pow",
    "corner_sequence",
    "pi_m",
    "c_m",
    "corner_operator",
    "apply_operator",
    "apply_to_generator",
    "run_key_exchange",
    "random_invertible",
    "random_block_element",
]


class ParameterError(ValueError):
    """Protocol parameters violate a precondition (e.g. A not invertible)."""


class ProtocolError(RuntimeError):
    """Alice's and Bob's shared secrets disagree."""


@dataclass(frozen=True)
class PointMatrix:
    """An r x s matrix of points on one curve."""

    entries: tuple[tuple[Point, ...], ...]
    curve: CurveParams

    def __post_init__(self):
        entries = tuple(tuple(row) for row in self.entries)
        if not entries or not entries[0] or len({len(row) for row in entries}) != 1:
            raise DimensionError("point matrix must be a non-empty rectangle")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def zeros(cls, rows: int, cols: int, curve: CurveParams) -> "PointMatrix":
        return cls(tuple((None,) * cols for _ in range(rows)), curve)

    @classmethod
    def from_flat(cls, flat: Sequence[Point], rows: int, cols: int, curve: CurveParams) -> "PointMatrix":
        return cls(tuple(tuple(flat[i * cols:(i + 1) * cols]) for i in range(rows)), curve)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.entries), len(self.entries[0])

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    @property
    def modulus(self) -> int:
        return self.curve.n

    def flat(self) -> tuple[Point, ...]:
        return tuple(P for row in self.entries for P in row)

    def __getitem__(self, idx):
        i, j = idx
        return self.entries[i][j]

    def __add__(self, other: "PointMatrix") -> "PointMatrix":
        return self.add(other)

    def add(self, other: "PointMatrix", counter: Optional[OpCounter] = None) -> "PointMatrix":
        if self.shape != other.shape or self.curve != other.curve:
            raise DimensionError("point matrices differ in shape or curve")
        p, a = self.curve.p, self.curve.a
        flat = [_add(P, Q, p, a) for P, Q in zip(self.flat(), other.flat())]
        if counter is not None:
            counter.adds += sum(P is not None and Q is not None for P, Q in zip(self.flat(), other.flat()))
        return PointMatrix.from_flat(flat, self.rows, self.cols, self.curve)

    def is_zero(self) -> bool:
        return all(P is None for P in self.flat())


Block = Union[PointMatrix, ZnMatrix]


def _combine(left: ZnMatrix, X: Block, Y: Block, right: ZnMatrix, counter=None) -> Block:
    """left @ X + Y @ right, for residue or point corners."""
    if isinstance(X, ZnMatrix) and isinstance(Y, ZnMatrix):
        return left @ X + Y @ right
    if not (isinstance(X, PointMatrix) and isinstance(Y, PointMatrix)):
        raise TypeError("corner blocks must both be points or both be residues")
    r, s = left.rows, right.cols
    L, R = left.tolist(), right.tolist()
    Xe, Ye = X.entries, Y.entries
    out = []
    for i in range(r):
        for j in range(s):
            scalars = [L[i][k] for k in range(X.rows)] + [R[k][j] for k in range(Y.cols)]
            points = [Xe[k][j] for k in range(X.rows)] + [Ye[i][k] for k in range(Y.cols)]
            out.append(multi_scalar_mul(scalars, points, X.curve, counter))
    return PointMatrix.from_flat(out, r, s, X.curve)


@dataclass(frozen=True)
class BlockElement:
    """[A X; 0 B] with A r x r, B s x s over Z/nZ and X r x s."""

    A: ZnMatrix
    block: Block
    B: ZnMatrix

    def __post_init__(self):
        r, s = self.block.shape
        if self.A.shape != (r, r) or self.B.shape != (s, s):
            raise DimensionError(f"blocks {self.A.shape}, {self.block.shape}, {self.B.shape} do not fit")
        n = self.block.modulus
        if self.A.modulus != n or self.B.modulus != n:
            raise DimensionError("A, B and the corner must share the modulus n")

    @property
    def r(self) -> int:
        return self.A.rows

    @property
    def s(self) -> int:
        return self.B.rows

    @property
    def modulus(self) -> int:
        return self.A.modulus

    def with_block(self, block: Block) -> "BlockElement":
        return BlockElement(self.A, block, self.B)


def block_mul(X: BlockElement, Y: BlockElement, counter: Optional[OpCounter] = None) -> BlockElement:
    """[A P; 0 B][C Q; 0 D] = [AC, AQ + PD; 0, BD]."""
    if (X.r, X.s) != (Y.r, Y.s):
        raise DimensionError(f"cannot multiply ({X.r},{X.s}) by ({Y.r},{Y.s}) block elements")
    return BlockElement(X.A @ Y.A, _combine(X.A, Y.block, X.block, Y.B, counter), X.B @ Y.B)


def block_identity(like: BlockElement) -> BlockElement:
    n = like.modulus
    if isinstance(like.block, PointMatrix):
        zero: Block = PointMatrix.zeros(like.r, like.s, like.block.curve)
    else:
        zero = ZnMatrix.zeros(like.r, like.s, n)
    return BlockElement(ZnMatrix.identity(like.r, n), zero, ZnMatrix.identity(like.s, n))


def _residue_pow(X: BlockElement, m: int) -> BlockElement:
    result = block_identity(X)
    base = X
    while m:
        if m & 1:
            result = block_mul(result, base)
        m >>= 1
        if m:
            base = block_mul(base, base)
    return result


def corner_operator(A: ZnMatrix, B: ZnMatrix, m: int) -> ZnMatrix:
    """The rs x rs matrix K_m with vec(corner of [A X; 0 B]^m) = K_m vec(X).

    vec is row-major, so vec(A X B) = (A kron B^T) vec(X).  K_m is the corner
    of [[A kron I, I], [0, I kron B^T]]^m, computed by square-and-multiply.
    """
    r, s, n = A.rows, B.rows, A.modulus
    left = ZnMatrix(np.kron(A.array.astype(object), np.eye(s, dtype=object)), n)
    right = ZnMatrix(np.kron(np.eye(r, dtype=object), B.array.T.astype(object)), n)
    lifted = BlockElement(left, ZnMatrix.identity(r * s, n), right)
    return _residue_pow(lifted, m).block


def apply_operator(K: ZnMatrix, X: PointMatrix, counter: Optional[OpCounter] = None) -> PointMatrix:
    """Point matrix with vec = K vec(X), one multi-scalar multiplication per entry."""
    flat = X.flat()
    rows = K.tolist()
    out = [multi_scalar_mul(row, flat, X.curve, counter) for row in rows]
    return PointMatrix.from_flat(out, X.rows, X.cols, X.curve)


def block_pow(X: BlockElement, m: int, counter: Optional[OpCounter] = None) -> BlockElement:
    """X^m by square-and-multiply in the semigroup.

    For a point corner the squarings are done on the linear operator
    X -> corner(M^m) over Z/nZ, and the points are touched once at the end;
    the result is the same as squaring point blocks directly.
    """
    if m < 0:
        raise ValueError("negative exponent")
    if isinstance(X.block, ZnMatrix):
        return _residue_pow(X, m)
    K = corner_operator(X.A, X.B, m)
    return BlockElement(X.A**m, apply_operator(K, X.block, counter), X.B**m)


def corner_sequence(base: BlockElement, counter: Optional[OpCounter] = None) -> Iterator[Block]:
    """Yield X_0 = 0, X_1 = X, X_2, ... with X_i = A X_{i-1} + X B^(i-1)."""
    n = base.modulus
    identity = block_identity(base)
    X = base.block
    prev = identity.block
    yield prev
    Bpow = ZnMatrix.identity(base.s, n)
    while True:
        cur = _combine(base.A, prev, X, Bpow, counter)
        yield cur
        prev = cur
        Bpow = Bpow @ base.B


def pi_m(base: BlockElement, m: int, counter: Optional[OpCounter] = None) -> Block:
    """Corner of base^m via the linear recurrence (O(m) block steps)."""
    if m < 0:
        raise ValueError("negative index")
    for i, X in enumerate(corner_sequence(base, counter)):
        if i == m:
            return X
    raise AssertionError("unreachable")


def c_m(base: BlockElement, m: int) -> ZnMatrix:
    """Residue version of :func:`pi_m`; ``base.block`` must be a ZnMatrix."""
    if not isinstance(base.block, ZnMatrix):
        raise TypeError("c_m needs a residue corner")
    return pi_m(base, m)


def apply_to_generator(C: ZnMatrix, P: Point, curve: CurveParams, counter: Optional[OpCounter] = None) -> PointMatrix:
    """The point matrix [c_ij P]."""
    flat = [scalar_mul(c, P, curve, counter) for c in C.flat()]
    return PointMatrix.from_flat(flat, C.rows, C.cols, curve)


@dataclass(frozen=True)
class KeyExchangeTranscript:
    curve: CurveParams
    base: BlockElement
    alice_secret: int
    bob_secret: int
    alice_public: PointMatrix
    bob_public: PointMatrix
    shared: PointMatrix

    def recompute(self) -> bool:
        """Re-run both sides of the exchange and compare with the recorded values."""
        k, l = self.alice_secret, self.bob_secret
        if block_pow(self.base, k).block != self.alice_public:
            return False
        if block_pow(self.base, l).block != self.bob_public:
            return False
        a_side = block_pow(self.base.with_block(self.bob_public), k).block
        b_side = block_pow(self.base.with_block(self.alice_public), l).block
        return a_side == b_side == self.shared


def _require_invertible(M: ZnMatrix, name: str) -> None:
    if gcd(det_mod(M), M.modulus) != 1:
        raise ParameterError(f"{name} is not invertible mod {M.modulus}")


def run_key_exchange(curve: CurveParams, base: BlockElement, k: int, l: int) -> KeyExchangeTranscript:
    """Both parties' computations; raises ProtocolError if the secrets disagree."""
    if not isinstance(base.block, PointMatrix):
        raise TypeError("the public element needs a point corner")
    if k < 1 or l < 1:
        raise ParameterError("private keys must be positive")
    _require_invertible(base.A, "A")
    _require_invertible(base.B, "B")
    pi_k = block_pow(base, k).block
    pi_l = block_pow(base, l).block
    alice_shared = block_pow(base.with_block(pi_l), k).block
    bob_shared = block_pow(base.with_block(pi_k), l).block
    if alice_shared != bob_shared:
        raise ProtocolError("(Pi_l)_k != (Pi_k)_l")
    return KeyExchangeTranscript(curve, base, k, l, pi_k, pi_l, alice_shared)


def random_matrix(rows: int, cols: int, n: int, rng: random.Random) -> ZnMatrix:
    return ZnMatrix([[rng.randrange(n) for _ in range(cols)] for _ in range(rows)], n)


def random_invertible(size: int, n: int, rng: random.Random) -> ZnMatrix:
    while True:
        M = random_matrix(size, size, n, rng)
        if gcd(det_mod(M), n) == 1:
            return M


def random_block_element(
    curve: CurveParams,
    r: int,
    s: int,
    rng: random.Random,
    invertible: bool = True,
) -> BlockElement:
    """Public element with uniformly random A, B (invertible if asked) and random points."""
    n = curve.n
    if invertible:
        A, B = random_invertible(r, n, rng), random_invertible(s, n, rng)
    else:
        A, B = random_matrix(r, r, n, rng), random_matrix(s, s, n, rng)
    Pi = PointMatrix.from_flat([random_point(curve, rng) for _ in range(r * s)], r, s, curve)
    return BlockElement(A, Pi, B)
