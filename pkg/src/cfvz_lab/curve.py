"""Short Weierstrass curves y^2 = x^3 + ax + b over prime fields.

Points are plain tuples ``(x, y)``; the point at infinity is ``None``.
Arithmetic is affine with one modular inversion per addition, which is
plenty at the group sizes used here (n below a few million).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import lru_cache
from math import isqrt
from typing import Optional, Sequence, Tuple

import numpy as np
from sympy import isprime, nextprime
from sympy.ntheory import sqrt_mod

from .modring import factor_modulus

Point = Optional[Tuple[int, int]]
INFINITY: Point = None

__all__ = [
    "Point",
    "INFINITY",
    "CurveError",
    "NotCyclicError",
    "CurveSearchError",
    "NotFoundError",
    "OpCounter",
    "EllipticCurve",
    "CurveParams",
    "GroupOrder",
    "is_on_curve",
    "point_neg",
    "point_add",
    "scalar_mul",
    "multi_scalar_mul",
    "group_order",
    "find_cyclic_generator",
    "make_curve_params",
    "random_curve",
    "random_point",
    "dlp_bruteforce",
]


class CurveError(ValueError):
    """Singular curve, or a point that is not on the curve."""


class NotCyclicError(RuntimeError):
    """No generator of full order was found within the retry budget."""


class CurveSearchError(CurveError):
    """No curve with the requested order and cofactor shape was found."""


class NotFoundError(LookupError):
    """Point is not a multiple of the generator."""


@dataclass
class OpCounter:
    """Tally of group operations (additions and doublings both count)."""

    adds: int = 0


@dataclass(frozen=True)
class EllipticCurve:
    p: int
    a: int
    b: int

    def __post_init__(self):
        if self.p < 3 or not isprime(self.p):
            raise CurveError(f"field modulus {self.p} is not an odd prime")
        object.__setattr__(self, "a", self.a % self.p)
        object.__setattr__(self, "b", self.b % self.p)
        if (4 * self.a**3 + 27 * self.b**2) % self.p == 0:
            raise CurveError(f"singular curve y^2 = x^3 + {self.a}x + {self.b} over F_{self.p}")

    def contains(self, P: Point) -> bool:
        return is_on_curve(P, self)


@dataclass(frozen=True)
class CurveParams(EllipticCurve):
    """A curve whose group is cyclic of order n = l * p_prime with a known generator."""

    n: int = field(default=0)
    l: int = field(default=1)
    p_prime: int = field(default=0)
    generator: Point = field(default=None)

    def __post_init__(self):
        super().__post_init__()
        if self.n != self.l * self.p_prime or not isprime(self.p_prime):
            raise CurveError(f"order {self.n} is not cofactor {self.l} times prime {self.p_prime}")
        if self.generator is None or not is_on_curve(self.generator, self):
            raise CurveError("generator is missing or not on the curve")
        # Check against the bare curve: scalar_mul would reduce k mod the claimed n.
        bare = self.curve
        if scalar_mul(self.n, self.generator, bare) is not None:
            raise CurveError("n * generator is not the identity")
        for q in factor_modulus(self.n):
            if scalar_mul(self.n // q, self.generator, bare) is None:
                raise CurveError(f"generator does not have full order {self.n}")

    @property
    def curve(self) -> EllipticCurve:
        return EllipticCurve(self.p, self.a, self.b)


class GroupOrder(tuple):
    """``(n, factors)`` with convenience accessors for the n = l * p' split."""

    def __new__(cls, n: int, factors: dict[int, int]):
        return super().__new__(cls, (n, factors))

    @property
    def n(self) -> int:
        return self[0]

    @property
    def factors(self) -> dict[int, int]:
        return self[1]

    @property
    def p_prime(self) -> int:
        return max(self.factors)

    @property
    def l(self) -> int:
        return self.n // self.p_prime


def is_on_curve(P: Point, curve: EllipticCurve) -> bool:
    if P is None:
        return True
    x, y = P
    p = curve.p
    if not (0 <= x < p and 0 <= y < p):
        return False
    return (y * y - (x * x * x + curve.a * x + curve.b)) % p == 0


def point_neg(P: Point, curve: EllipticCurve) -> Point:
    if P is None:
        return None
    return (P[0], (-P[1]) % curve.p)


def _add(P: Point, Q: Point, p: int, a: int) -> Point:
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if (y1 + y2) % p == 0:
            return None
        lam = (3 * x1 * x1 + a) * pow(2 * y1, -1, p) % p
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, p) % p
    x3 = (lam * lam - x1 - x2) % p
    return (x3, (lam * (x1 - x3) - y1) % p)


def point_add(P: Point, Q: Point, curve: EllipticCurve, counter: Optional[OpCounter] = None) -> Point:
    """Group law on E(F_p), checking both inputs lie on the curve."""
    if not is_on_curve(P, curve):
        raise CurveError(f"{P} is not on the curve")
    if not is_on_curve(Q, curve):
        raise CurveError(f"{Q} is not on the curve")
    if counter is not None:
        counter.adds += 1
    return _add(P, Q, curve.p, curve.a)


def scalar_mul(k: int, P: Point, curve: EllipticCurve, counter: Optional[OpCounter] = None) -> Point:
    """k * P by left-to-right double-and-add.

    k is reduced modulo the group order when the curve carries one; negative
    k acts through point negation.
    """
    n = getattr(curve, "n", 0)
    if n:
        k %= n
    if k < 0:
        k, P = -k, point_neg(P, curve)
    if k == 0 or P is None:
        return None
    p, a = curve.p, curve.a
    R = P
    ops = 0
    for bit in bin(k)[3:]:
        R = _add(R, R, p, a)
        ops += 1
        if bit == "1":
            R = _add(R, P, p, a)
            ops += 1
    if counter is not None:
        counter.adds += ops
    return R


def multi_scalar_mul(
    scalars: Sequence[int],
    points: Sequence[Point],
    curve: EllipticCurve,
    counter: Optional[OpCounter] = None,
) -> Point:
    """sum(k_i * P_i) with shared doublings (Straus/Shamir interleaving)."""
    n = getattr(curve, "n", 0)
    terms = []
    for k, P in zip(scalars, points):
        if n:
            k %= n
        if k < 0:
            k, P = -k, point_neg(P, curve)
        if k and P is not None:
            terms.append((k, P))
    if not terms:
        return None
    p, a = curve.p, curve.a
    width = max(k.bit_length() for k, _ in terms)
    R: Point = None
    ops = 0
    for bit in range(width - 1, -1, -1):
        if R is not None:
            R = _add(R, R, p, a)
            ops += 1
        for k, P in terms:
            if (k >> bit) & 1:
                if R is None:
                    R = P
                else:
                    R = _add(R, P, p, a)
                    ops += 1
    if counter is not None:
        counter.adds += ops
    return R


def group_order(p: int, a: int, b: int) -> GroupOrder:
    """#E(F_p) by counting square roots of x^3 + ax + b for every x.

    Vectorized with numpy; intended for p below a few million.
    """
    curve = EllipticCurve(p, a, b)
    if p >= 2**32:
        raise ValueError("point counting by enumeration needs p < 2**32")
    a, b = curve.a, curve.b
    xs = np.arange(p, dtype=np.uint64)
    sq = (xs * xs) % np.uint64(p)
    rhs = (sq * xs % np.uint64(p) + np.uint64(a) * xs % np.uint64(p) + np.uint64(b)) % np.uint64(p)
    roots = np.bincount(sq.astype(np.int64), minlength=p)
    n = 1 + int(roots[rhs.astype(np.int64)].sum())
    return GroupOrder(n, factor_modulus(n))


def random_point(curve: EllipticCurve, rng: random.Random) -> Point:
    """Uniform-ish affine point found by sampling x until x^3 + ax + b is a square."""
    p = curve.p
    while True:
        x = rng.randrange(p)
        rhs = (x * x * x + curve.a * x + curve.b) % p
        if rhs == 0:
            return (x, 0)
        y = sqrt_mod(rhs, p)
        if y is not None:
            return (x, y if rng.random() < 0.5 else (-y) % p)


def find_cyclic_generator(
    curve: EllipticCurve,
    order: GroupOrder,
    rng: random.Random,
    retries: int = 64,
) -> Point:
    """A point of full order ``n``, or NotCyclicError after ``retries`` attempts."""
    n = order.n
    for _ in range(retries):
        P = random_point(curve, rng)
        if all(scalar_mul(n // q, P, curve) is not None for q in order.factors):
            return P
    raise NotCyclicError(f"no generator of order {n} found in {retries} tries")


def make_curve_params(p: int, a: int, b: int, rng: Optional[random.Random] = None) -> CurveParams:
    """Count points, factor the order and find a generator for an explicit curve."""
    rng = rng or random.Random(0)
    curve = EllipticCurve(p, a, b)
    order = group_order(p, a, b)
    g = find_cyclic_generator(curve, order, rng)
    return CurveParams(curve.p, curve.a, curve.b, n=order.n, l=order.l, p_prime=order.p_prime, generator=g)


def random_curve(
    rng: random.Random,
    min_order: int,
    max_order: int,
    max_cofactor: int = 1,
    min_cofactor: int = 1,
    attempts: int = 10_000,
) -> CurveParams:
    """Sample a cyclic curve with min_order <= n <= max_order and n = l * p'.

    The field prime is drawn near a uniform target in the order range; the
    coefficients are drawn uniformly until the shape constraints hold.
    """
    lo = max(5, min_order - 2 * isqrt(min_order) - 2)
    hi = max_order + 2 * isqrt(max_order) + 2
    for _ in range(attempts):
        p = nextprime(rng.randrange(lo, hi))
        a, b = rng.randrange(p), rng.randrange(p)
        if (4 * a**3 + 27 * b**2) % p == 0:
            continue
        order = group_order(p, a, b)
        if not (min_order <= order.n <= max_order and min_cofactor <= order.l <= max_cofactor):
            continue
        try:
            g = find_cyclic_generator(EllipticCurve(p, a, b), order, rng)
        except NotCyclicError:
            continue
        return CurveParams(p, a, b, n=order.n, l=order.l, p_prime=order.p_prime, generator=g)
    raise CurveSearchError(f"no cyclic curve with {min_order} <= n <= {max_order} in {attempts} attempts")


@lru_cache(maxsize=8)
def _dlog_table(curve: CurveParams):
    # Every multiple k*P for k in [0, n), sorted by x for binary search.
    n, p, a = curve.n, curve.p, curve.a
    xs = np.empty(n, dtype=np.int64)
    ys = np.empty(n, dtype=np.int64)
    xs[0] = ys[0] = -1
    R = curve.generator
    for k in range(1, n):
        xs[k], ys[k] = R
        R = _add(R, curve.generator, p, a)
    order = np.argsort(xs, kind="stable")
    return xs[order], ys[order], order


def dlp_bruteforce(Q: Point, curve: CurveParams) -> int:
    """The unique k in [0, n) with k * generator == Q, by exhaustive enumeration."""
    if Q is None:
        return 0
    if curve.n >= 2**24:
        raise ValueError("brute force logarithms need n < 2**24")
    xs, ys, ks = _dlog_table(curve)
    i = int(np.searchsorted(xs, Q[0]))
    while i < len(xs) and xs[i] == Q[0]:
        if ys[i] == Q[1]:
            return int(ks[i])
        i += 1
    raise NotFoundError(f"{Q} is not in the group generated by {curve.generator}")
