"""Exact matrix arithmetic over the residue ring Z/nZ.

Matrices are small (at most a few dozen rows) so everything is done with
Python integers or int64 numpy arrays, whichever is exact for the modulus.
The solvers tolerate composite moduli: elimination uses unit pivots when it
can and otherwise splits the modulus into prime powers and recombines the
pieces with the Chinese remainder theorem.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd, prod
from typing import Iterable, Sequence

import numpy as np
from sympy import factorint

__all__ = [
    "DimensionError",
    "NoInverseError",
    "NoSolutionError",
    "ZnMatrix",
    "LinearSolution",
    "mat_add",
    "mat_mul",
    "det_mod",
    "invert_mod",
    "solve_linear",
    "charpoly_coeffs",
    "poly_eval_matrix",
    "factor_modulus",
]

_INT64_SAFE = 2**62


class DimensionError(ValueError):
    """Operands have incompatible shapes or moduli."""


class NoInverseError(ArithmeticError):
    """Matrix is not invertible modulo any nontrivial divisor of n."""


class NoSolutionError(ArithmeticError):
    """Linear system is inconsistent over Z/nZ."""


class ZnMatrix:
    """Immutable rectangular matrix over Z/nZ.

    Entries are reduced into ``[0, n)`` on construction, so equality is a
    plain entrywise comparison.
    """

    __slots__ = ("_data", "modulus")

    def __init__(self, entries, modulus: int):
        modulus = int(modulus)
        if modulus < 2:
            raise ValueError(f"modulus must be >= 2, got {modulus}")
        dtype = np.int64 if modulus < _INT64_SAFE else object
        if isinstance(entries, np.ndarray) and entries.dtype != object and dtype is np.int64:
            data = np.mod(entries.astype(np.int64, copy=False), modulus)
        else:
            rows = [[int(e) % modulus for e in row] for row in entries]
            if rows and len({len(row) for row in rows}) != 1:
                raise DimensionError("ragged rows")
            data = np.array(rows, dtype=dtype)
        if data.ndim != 2 or 0 in data.shape:
            raise DimensionError(f"expected a non-empty 2-d matrix, got shape {data.shape}")
        data.setflags(write=False)
        self._data = data
        self.modulus = modulus

    @classmethod
    def zeros(cls, rows: int, cols: int, modulus: int) -> "ZnMatrix":
        return cls(np.zeros((rows, cols), dtype=np.int64), modulus)

    @classmethod
    def identity(cls, size: int, modulus: int) -> "ZnMatrix":
        return cls(np.eye(size, dtype=np.int64), modulus)

    @classmethod
    def column(cls, values: Iterable[int], modulus: int) -> "ZnMatrix":
        return cls([[v] for v in values], modulus)

    @property
    def shape(self) -> tuple[int, int]:
        return self._data.shape

    @property
    def rows(self) -> int:
        return self._data.shape[0]

    @property
    def cols(self) -> int:
        return self._data.shape[1]

    @property
    def array(self) -> np.ndarray:
        """Read-only view of the residues."""
        return self._data

    def tolist(self) -> list[list[int]]:
        return [[int(e) for e in row] for row in self._data]

    def flat(self) -> tuple[int, ...]:
        """Entries in row-major order."""
        return tuple(int(e) for e in self._data.ravel())

    def __getitem__(self, idx):
        return int(self._data[idx])

    @property
    def T(self) -> "ZnMatrix":
        return ZnMatrix(self._data.T.copy(), self.modulus)

    def _check_same(self, other: "ZnMatrix") -> None:
        if not isinstance(other, ZnMatrix):
            raise TypeError(f"expected ZnMatrix, got {type(other).__name__}")
        if other.modulus != self.modulus:
            raise DimensionError(f"moduli differ: {self.modulus} vs {other.modulus}")

    def __add__(self, other: "ZnMatrix") -> "ZnMatrix":
        return mat_add(self, other)

    def __sub__(self, other: "ZnMatrix") -> "ZnMatrix":
        self._check_same(other)
        if self.shape != other.shape:
            raise DimensionError(f"shape mismatch {self.shape} vs {other.shape}")
        return ZnMatrix(self._data - other._data, self.modulus)

    def __neg__(self) -> "ZnMatrix":
        return ZnMatrix(-self._data, self.modulus)

    def __matmul__(self, other: "ZnMatrix") -> "ZnMatrix":
        return mat_mul(self, other)

    def scale(self, c: int) -> "ZnMatrix":
        c = int(c) % self.modulus
        if self._data.dtype == object or (self.modulus - 1) ** 2 >= 2**63:
            return ZnMatrix(self._data.astype(object) * c, self.modulus)
        return ZnMatrix(self._data * c, self.modulus)

    def __pow__(self, m: int) -> "ZnMatrix":
        if self.rows != self.cols:
            raise DimensionError("power of a non-square matrix")
        if m < 0:
            raise ValueError("negative matrix power")
        result = ZnMatrix.identity(self.rows, self.modulus)
        base = self
        while m:
            if m & 1:
                result = result @ base
            m >>= 1
            if m:
                base = base @ base
        return result

    def reduce(self, modulus: int) -> "ZnMatrix":
        """Image under Z/nZ -> Z/mZ for a divisor m of n."""
        if self.modulus % modulus:
            raise ValueError(f"{modulus} does not divide {self.modulus}")
        return ZnMatrix(self._data, modulus)

    def is_zero(self) -> bool:
        return not self._data.any()

    def __eq__(self, other) -> bool:
        if not isinstance(other, ZnMatrix):
            return NotImplemented
        return (
            self.modulus == other.modulus
            and self.shape == other.shape
            and bool(np.array_equal(self._data, other._data))
        )

    def __hash__(self) -> int:
        return hash((self.modulus, self.shape, self.flat()))

    def __repr__(self) -> str:
        return f"ZnMatrix({self.tolist()}, modulus={self.modulus})"


@dataclass(frozen=True)
class LinearSolution:
    """A solution vector valid modulo ``modulus`` (a divisor of the ring modulus)."""

    solution: tuple[int, ...]
    modulus: int
    unique: bool


def mat_add(X: ZnMatrix, Y: ZnMatrix) -> ZnMatrix:
    X._check_same(Y)
    if X.shape != Y.shape:
        raise DimensionError(f"shape mismatch {X.shape} vs {Y.shape}")
    if X._data.dtype == object or Y._data.dtype == object:
        return ZnMatrix(X._data.astype(object) + Y._data.astype(object), X.modulus)
    return ZnMatrix(X._data + Y._data, X.modulus)


def mat_mul(X: ZnMatrix, Y: ZnMatrix) -> ZnMatrix:
    X._check_same(Y)
    if X.cols != Y.rows:
        raise DimensionError(f"cannot multiply {X.shape} by {Y.shape}")
    n = X.modulus
    if X._data.dtype != object and (n - 1) ** 2 * X.cols < 2**63:
        return ZnMatrix(X._data @ Y._data, n)
    return ZnMatrix(X._data.astype(object).dot(Y._data.astype(object)), n)


def _rows(X: ZnMatrix) -> list[list[int]]:
    return X.tolist()


def _bareiss_det(M: list[list[int]]) -> int:
    # Fraction-free elimination over the integers; exact divisions only.
    M = [row[:] for row in M]
    size = len(M)
    sign, prev = 1, 1
    for k in range(size - 1):
        if M[k][k] == 0:
            for i in range(k + 1, size):
                if M[i][k] != 0:
                    M[k], M[i] = M[i], M[k]
                    sign = -sign
                    break
            else:
                return 0
        pivot = M[k][k]
        for i in range(k + 1, size):
            for j in range(k + 1, size):
                M[i][j] = (M[i][j] * pivot - M[i][k] * M[k][j]) // prev
        prev = pivot
    return sign * M[-1][-1]


def det_mod(X: ZnMatrix) -> int:
    """Determinant of a square matrix, reduced mod n."""
    if X.rows != X.cols:
        raise DimensionError(f"determinant of non-square {X.shape} matrix")
    return _bareiss_det(_rows(X)) % X.modulus


def _inverse_with_unit_det(M: list[list[int]], m: int) -> list[list[int]]:
    """Gauss-Jordan inverse over Z/mZ for a matrix whose determinant is a unit.

    Pivots are built by Euclidean row reduction, so no factorization of m
    is needed and the procedure also works when no single entry of a column
    is a unit.
    """
    size = len(M)
    aug = [[e % m for e in row] + [int(i == j) for j in range(size)] for i, row in enumerate(M)]
    for c in range(size):
        while True:
            nonzero = [i for i in range(c, size) if aug[i][c]]
            if not nonzero:
                raise NoInverseError("matrix is singular")
            piv = min(nonzero, key=lambda i: aug[i][c])
            aug[c], aug[piv] = aug[piv], aug[c]
            if len(nonzero) == 1:
                break
            pv = aug[c][c]
            for i in range(c + 1, size):
                q = aug[i][c] // pv
                if q:
                    ri, rc = aug[i], aug[c]
                    aug[i] = [(a - q * b) % m for a, b in zip(ri, rc)]
        pv = aug[c][c]
        if gcd(pv, m) != 1:
            raise NoInverseError("pivot is not a unit")
        inv = pow(pv, -1, m)
        aug[c] = [(a * inv) % m for a in aug[c]]
        for i in range(size):
            if i != c and aug[i][c]:
                f = aug[i][c]
                aug[i] = [(a - f * b) % m for a, b in zip(aug[i], aug[c])]
    return [row[size:] for row in aug]


def invert_mod(X: ZnMatrix) -> ZnMatrix:
    """Inverse of ``X`` over the largest quotient ring where it exists.

    Returns a matrix whose ``modulus`` is the ring the inverse lives in: n
    itself when det(X) is a unit, otherwise the largest divisor m of n with
    gcd(det X, m) = 1.
    """
    if X.rows != X.cols:
        raise DimensionError(f"inverse of non-square {X.shape} matrix")
    n = X.modulus
    d = det_mod(X)
    m = n
    g = gcd(d, m)
    while g != 1:
        m //= g
        g = gcd(d, m)
    if m == 1:
        raise NoInverseError(f"matrix is singular modulo every prime factor of {n}")
    return ZnMatrix(_inverse_with_unit_det(_rows(X), m), m)


def factor_modulus(n: int) -> dict[int, int]:
    return {int(p): int(e) for p, e in factorint(n).items()}


def _unit_pivot_solve(M: list[list[int]], b: list[int], n: int):
    """Row reduction mod n using only unit pivots.

    Returns (solution, unique) or None when some column has nonzero entries
    but no unit among them.
    """
    rows, cols = len(M), len(M[0])
    aug = [row[:] + [bi] for row, bi in zip(M, b)]
    pivots: list[tuple[int, int]] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        piv = next((i for i in range(r, rows) if aug[i][c] and gcd(aug[i][c], n) == 1), None)
        if piv is None:
            if any(aug[i][c] for i in range(r, rows)):
                return None
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        inv = pow(aug[r][c], -1, n)
        aug[r] = [(a * inv) % n for a in aug[r]]
        for i in range(rows):
            if i != r and aug[i][c]:
                f = aug[i][c]
                aug[i] = [(a - f * p) % n for a, p in zip(aug[i], aug[r])]
        pivots.append((r, c))
        r += 1
    for i in range(r, rows):
        if any(aug[i][:cols]):
            return None
        if aug[i][cols]:
            raise NoSolutionError("inconsistent linear system")
    x = [0] * cols
    for i, c in pivots:
        x[c] = aug[i][cols]
    return x, len(pivots) == cols


def _valuation(a: int, p: int) -> int:
    if a == 0:
        return 1 << 30
    v = 0
    while a % p == 0:
        a //= p
        v += 1
    return v


def _smith_like_solve(M: list[list[int]], b: list[int], p: int, e: int):
    """Solve M x = b over Z/p^eZ.

    Computes invertible U, V with U M V diagonal (Z/p^eZ is a chain ring so
    the minimal-valuation entry divides every other one), solves the
    diagonal system with free variables set to zero and maps back.
    Returns (x, unique).
    """
    q = p**e
    rows, cols = len(M), len(M[0])
    A = [[a % q for a in row] for row in M]
    rhs = [bi % q for bi in b]
    V = [[int(i == j) for j in range(cols)] for i in range(cols)]
    rank_diag: list[int] = []
    for k in range(min(rows, cols)):
        best = None
        for j in range(k, cols):
            for i in range(k, rows):
                if A[i][j]:
                    v = _valuation(A[i][j], p)
                    if best is None or v < best[0]:
                        best = (v, i, j)
                        if v == 0:
                            break
            if best is not None and best[0] == 0:
                break
        if best is None:
            break
        v, pi, pj = best
        A[k], A[pi] = A[pi], A[k]
        rhs[k], rhs[pi] = rhs[pi], rhs[k]
        if pj != k:
            for row in A:
                row[k], row[pj] = row[pj], row[k]
            for row in V:
                row[k], row[pj] = row[pj], row[k]
        pk = p**v
        unit = pow(A[k][k] // pk, -1, q)
        for i in range(k + 1, rows):
            if A[i][k]:
                f = (A[i][k] // pk) * unit % q
                A[i] = [(a - f * c) % q for a, c in zip(A[i], A[k])]
                rhs[i] = (rhs[i] - f * rhs[k]) % q
        for j in range(k + 1, cols):
            if A[k][j]:
                f = (A[k][j] // pk) * unit % q
                for row in A:
                    row[j] = (row[j] - f * row[k]) % q
                for row in V:
                    row[j] = (row[j] - f * row[k]) % q
        rank_diag.append(A[k][k])
    y = [0] * cols
    unique = len(rank_diag) == cols
    for k, d in enumerate(rank_diag):
        v = _valuation(d, p)
        pk = p**v
        if rhs[k] % pk:
            raise NoSolutionError("inconsistent linear system")
        if v:
            unique = False
        y[k] = (rhs[k] // pk) * pow(d // pk, -1, q) % q
    for i in range(len(rank_diag), rows):
        if rhs[i]:
            raise NoSolutionError("inconsistent linear system")
    x = [sum(V[i][j] * y[j] for j in range(cols)) % q for i in range(cols)]
    return x, unique


def _crt(residues: Sequence[int], moduli: Sequence[int]) -> int:
    n = prod(moduli)
    x = 0
    for r, m in zip(residues, moduli):
        c = n // m
        x += r * c * pow(c, -1, m)
    return x % n


def solve_linear(T: ZnMatrix, rhs: Sequence[int]) -> LinearSolution:
    """One solution of ``T x = rhs`` over Z/nZ, free variables zeroed.

    Raises NoSolutionError when the system is inconsistent.
    """
    n = T.modulus
    if len(rhs) != T.rows:
        raise DimensionError(f"rhs has length {len(rhs)}, matrix has {T.rows} rows")
    M = _rows(T)
    b = [int(v) % n for v in rhs]
    fast = _unit_pivot_solve(M, b, n)
    if fast is not None:
        x, unique = fast
        return LinearSolution(tuple(x), n, unique)
    parts, moduli, unique = [], [], True
    for p, e in factor_modulus(n).items():
        x, u = _smith_like_solve(M, b, p, e)
        parts.append(x)
        moduli.append(p**e)
        unique = unique and u
    x = tuple(_crt([part[i] for part in parts], moduli) for i in range(T.cols))
    return LinearSolution(x, n, unique)


def charpoly_coeffs(M: ZnMatrix) -> tuple[int, ...]:
    """Coefficients of det(xI - M) mod n, constant term first.

    Uses Berkowitz's algorithm, which needs no divisions and so is valid in
    any commutative ring.
    """
    if M.rows != M.cols:
        raise DimensionError(f"characteristic polynomial of non-square {M.shape} matrix")
    n = M.modulus
    A = _rows(M)
    size = len(A)
    # polys[i] holds the char poly of the leading (i+1)x(i+1) block, highest degree first.
    poly = [1, (-A[0][0]) % n]
    for k in range(1, size):
        R = [(-A[k][j]) % n for j in range(k)]
        C = [A[i][k] for i in range(k)]
        sub = [row[:k] for row in A[:k]]
        items = [C]
        for _ in range(k - 1):
            prev = items[-1]
            items.append([sum(sub[i][j] * prev[j] for j in range(k)) % n for i in range(k)])
        scalars = [1, (-A[k][k]) % n] + [sum(r * c for r, c in zip(R, it)) % n for it in items]
        # Toeplitz lower-triangular (k+2) x (k+1) matrix times poly.
        new = []
        for i in range(k + 2):
            acc = 0
            for j in range(min(i, k) + 1):
                acc += scalars[i - j] * poly[j]
            new.append(acc % n)
        poly = new
    return tuple(reversed(poly))


def poly_eval_matrix(coeffs: Sequence[int], M: ZnMatrix) -> ZnMatrix:
    """Evaluate sum(coeffs[i] * M**i) by Horner's rule."""
    acc = ZnMatrix.zeros(M.rows, M.cols, M.modulus)
    eye = ZnMatrix.identity(M.rows, M.modulus)
    for c in reversed(coeffs):
        acc = acc @ M + eye.scale(c)
    return acc
