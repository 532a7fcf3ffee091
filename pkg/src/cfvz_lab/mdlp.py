"""Solve many discrete logarithms in one cyclic group at once.

A single r-adding walk explores points Q = sum c_i P_i + d P whose
coefficients are known.  Every time a point repeats, the two coefficient
vectors give one linear relation among the unknown logarithms n_i of the
targets P_i = n_i P.  Once the relations have full rank the logarithms
follow from a matrix inversion, so tau logarithms cost roughly
sqrt(2 tau n) group operations instead of tau * sqrt(n).

The second half of the module is the Poisson approximation for the number
of coincidences among alpha random draws from n bins, which predicts that
cost.
"""

from __future__ import annotations

import logging
import math
import random
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .curve import CurveParams, OpCounter, Point, _add, point_neg, scalar_mul
from .modring import NoInverseError, ZnMatrix, det_mod, invert_mod

logger = logging.getLogger(__name__)

__all__ = [
    "MdlpError",
    "BudgetExhausted",
    "RankDeficientError",
    "InconsistentRelationsError",
    "WalkState",
    "RhoWalk",
    "RelationSystem",
    "MdlpStats",
    "make_walk",
    "branch_of",
    "walk_step",
    "collect_relations",
    "solve_logs",
    "solve_many_logs",
    "default_budget",
    "poisson_collision_prob",
    "min_walks",
    "gl_invertibility_prob",
    "empirical_collision_prob",
    "calibration_table",
]

_GOLDEN = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


class MdlpError(RuntimeError):
    pass


class BudgetExhausted(MdlpError):
    """Relation collection used up its point-addition budget."""

    def __init__(self, message: str, stats: "MdlpStats"):
        super().__init__(message)
        self.stats = stats


class RankDeficientError(MdlpError):
    """The relations do not determine all logarithms."""


class InconsistentRelationsError(MdlpError):
    """Recovered logarithms fail the final n_i * P == P_i check."""


@dataclass(frozen=True)
class WalkState:
    current: Point
    coeffs: tuple[int, ...]
    offset: int


@dataclass(frozen=True)
class RhoWalk:
    """Branch table of an r-adding walk: increment b is sum e_bi P_i + f_b P."""

    curve: CurveParams
    targets: tuple[Point, ...]
    increments: tuple[Point, ...]
    inc_coeffs: tuple[tuple[int, ...], ...]
    inc_offsets: tuple[int, ...]
    salt: int

    @property
    def partition_count(self) -> int:
        return len(self.increments)

    @property
    def tau(self) -> int:
        return len(self.targets)


@dataclass(frozen=True)
class RelationSystem:
    """Rows of T . (n_1..n_tau) = v (mod n), one per useful collision."""

    T: ZnMatrix
    v: tuple[int, ...]

    @property
    def t(self) -> int:
        return self.T.rows


@dataclass
class MdlpStats:
    walks_generated: int = 0
    point_additions: int = 0
    collisions_found: int = 0
    retries: int = 0

    def merge(self, other: "MdlpStats") -> None:
        self.walks_generated += other.walks_generated
        self.point_additions += other.point_additions
        self.collisions_found += other.collisions_found
        self.retries += other.retries


def branch_of(point: Point, partition_count: int, salt: int = 0) -> int:
    """Mix the x-coordinate and y parity into a branch index."""
    if point is None:
        return 0
    x, y = point
    h = (((x ^ salt) * _GOLDEN) & _MASK64) ^ (y & 1)
    h = ((h ^ (h >> 29)) * 0xBF58476D1CE4E5B9) & _MASK64
    return (h >> 32) % partition_count


def make_walk(
    targets: Sequence[Point],
    curve: CurveParams,
    rng: random.Random,
    partition_count: int = 32,
    counter: Optional[OpCounter] = None,
) -> RhoWalk:
    """Draw the branch increments from ``rng``; one addition per branch.

    The first tau increments are sums of neighbours on a random path through
    {P, P_1..P_tau}.  A path rooted at P is triangular, so their target parts
    span (Z/nZ)^tau; otherwise two targets that only ever appear together
    would have equal columns in every relation.  The other increments each
    add one basis point to an earlier increment, with no coefficient vector
    repeated, so even tau = 1 gets 32 distinct steps.  Branch order is
    shuffled at the end.
    """
    targets = tuple(targets)
    tau, n = len(targets), curve.n
    basis = [curve.generator, *targets]
    p, a = curve.p, curve.a
    partition_count = max(partition_count, tau)
    path = list(range(tau + 1))
    rng.shuffle(path)
    increments, vecs = [], []
    for u, w in zip(path, path[1:]):
        vec = [0] * (tau + 1)
        vec[u] += 1
        vec[w] += 1
        increments.append(_add(basis[u], basis[w], p, a))
        vecs.append(vec)
    if tau == 0:
        increments.append(_add(basis[0], basis[0], p, a))
        vecs.append([2])
    seen = {tuple(v) for v in vecs}
    while len(increments) < partition_count:
        # Chain onto an earlier increment; skip coefficient vectors already used.
        i, u = rng.randrange(len(increments)), rng.randrange(tau + 1)
        vec = list(vecs[i])
        vec[u] += 1
        if tuple(vec) in seen:
            continue
        seen.add(tuple(vec))
        increments.append(_add(increments[i], basis[u], p, a))
        vecs.append(vec)
    if counter is not None:
        counter.adds += len(increments)
    order = list(range(partition_count))
    rng.shuffle(order)
    increments = [increments[i] for i in order]
    offsets = [vecs[i][0] % n for i in order]
    coeffs = [tuple(c % n for c in vecs[i][1:]) for i in order]
    return RhoWalk(curve, targets, tuple(increments), tuple(coeffs), tuple(offsets), rng.getrandbits(61))


def walk_step(state: WalkState, walk: RhoWalk) -> WalkState:
    """Add the increment chosen by the current point's branch."""
    b = branch_of(state.current, walk.partition_count, walk.salt)
    n = walk.curve.n
    nxt = _add(state.current, walk.increments[b], walk.curve.p, walk.curve.a)
    coeffs = tuple((c + e) % n for c, e in zip(state.coeffs, walk.inc_coeffs[b]))
    return WalkState(nxt, coeffs, (state.offset + walk.inc_offsets[b]) % n)


def walk_identity_holds(state: WalkState, walk: RhoWalk) -> bool:
    """current == sum coeffs[i] P_i + offset P (slow; for tests)."""
    curve = walk.curve
    Q = scalar_mul(state.offset, curve.generator, curve)
    for c, P in zip(state.coeffs, walk.targets):
        Q = _add(Q, scalar_mul(c, P, curve), curve.p, curve.a)
    return Q == state.current


def default_budget(n: int, tau: int, multiplier: float = 64) -> int:
    return int(multiplier * math.sqrt(2 * tau * n))


class _RankTracker:
    """Incremental row echelon form over the prime field F_q."""

    def __init__(self, q: int, width: int):
        self.q = q
        self.width = width
        self.pivots: dict[int, list[int]] = {}

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def add(self, row: Sequence[int]) -> bool:
        q = self.q
        row = [x % q for x in row]
        for col in range(self.width):
            if not row[col]:
                continue
            piv = self.pivots.get(col)
            if piv is None:
                inv = pow(row[col], -1, q)
                self.pivots[col] = [x * inv % q for x in row]
                return True
            f = row[col]
            row = [(x - f * y) % q for x, y in zip(row, piv)]
        return False


class _CollisionTable:
    """Visited points with their coefficients; insert-or-report under a lock."""

    def __init__(self, tau: int, prime: int, n: int):
        self.seen: dict[Point, tuple[tuple[int, ...], int]] = {}
        self.rows: list[tuple[int, ...]] = []
        self.rhs: list[int] = []
        self.tracker = _RankTracker(prime, tau)
        self.tau = tau
        self.n = n
        self.lock = threading.Lock()

    @property
    def done(self) -> bool:
        return self.tracker.rank >= self.tau

    def visit(self, state: WalkState, stats: MdlpStats) -> bool:
        """Record ``state``; return True if the point had been seen before."""
        with self.lock:
            hit = self.seen.get(state.current)
            if hit is None:
                self.seen[state.current] = (state.coeffs, state.offset)
                return False
            stats.collisions_found += 1
            coeffs, offset = hit
            n = self.n
            row = tuple((c - d) % n for c, d in zip(state.coeffs, coeffs))
            if any(row):
                self.rows.append(row)
                self.rhs.append((offset - state.offset) % n)
                self.tracker.add(row)
            return True


def _run_walks(
    walk: RhoWalk,
    table: _CollisionTable,
    start: WalkState,
    stride: tuple[Point, int],
    rng: random.Random,
    stats: MdlpStats,
    budget: int,
    shared_stats: list[MdlpStats],
) -> None:
    """One worker: walk, and on every revisit restart from a fresh point.

    Consecutive start points differ by the stride jump (a large multiple of
    P) plus one random branch increment, so starts carry random target
    coefficients and two walks cannot meet trivially with equal coefficients.
    """
    curve = walk.curve
    p, a, n = curve.p, curve.a, curve.n
    jump, jump_off = stride
    state = start
    stats.walks_generated += 1
    while not table.done:
        if sum(s.point_additions for s in shared_stats) >= budget:
            return
        if table.visit(state, stats):
            b = rng.randrange(walk.partition_count)
            nxt = _add(_add(start.current, jump, p, a), walk.increments[b], p, a)
            coeffs = tuple((c + e) % n for c, e in zip(start.coeffs, walk.inc_coeffs[b]))
            start = WalkState(nxt, coeffs, (start.offset + jump_off + walk.inc_offsets[b]) % n)
            stats.point_additions += 2
            state = start
            stats.walks_generated += 1
            continue
        state = walk_step(state, walk)
        stats.point_additions += 1


def collect_relations(
    targets: Sequence[Point],
    curve: CurveParams,
    seed: int | random.Random = 0,
    budget: Optional[int] = None,
    budget_mult: float = 64,
    partition_count: int = 32,
    threads: int = 1,
) -> tuple[RelationSystem, MdlpStats]:
    """Walk until the collected relations have rank tau modulo the large prime p'.

    Walks share one table of visited points.  A walk stops at its first
    revisited point and the next one starts from a fresh point (two
    additions).  The budget counts every group operation, including the
    branch table set-up.  With ``threads > 1`` the workers share the table
    under a lock; relation order then depends on scheduling.
    """
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    targets = tuple(targets)
    tau, n = len(targets), curve.n
    if tau == 0:
        raise ValueError("no targets")
    if budget is None:
        budget = default_budget(n, tau, budget_mult)
    threads = max(1, int(threads))
    counter = OpCounter()
    walk = make_walk(targets, curve, rng, partition_count, counter)
    j = rng.randrange(n // 4 + 1, 3 * n // 4 + 2) % n or 1
    jump = scalar_mul(j, curve.generator, curve, counter)
    # Worker w starts at (w+1)*j*P and strides by threads*j*P.
    starts, S = [], jump
    for w in range(threads):
        starts.append(WalkState(S, (0,) * tau, (w + 1) * j % n))
        S = _add(S, jump, curve.p, curve.a)
        counter.adds += 1
    stride = (scalar_mul(threads, jump, curve, counter), threads * j % n)
    worker_rngs = [random.Random(rng.getrandbits(64)) for _ in range(threads)]
    setup = MdlpStats(point_additions=counter.adds)
    table = _CollisionTable(tau, curve.p_prime, n)
    worker_stats = [MdlpStats() for _ in range(threads)]
    shared = [setup, *worker_stats]
    args = [(walk, table, starts[w], stride, worker_rngs[w], worker_stats[w], budget, shared) for w in range(threads)]
    if threads == 1:
        _run_walks(*args[0])
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for f in [pool.submit(_run_walks, *a) for a in args]:
                f.result()
    stats = MdlpStats()
    for s in shared:
        stats.merge(s)
    if not table.done:
        raise BudgetExhausted(
            f"rank {table.tracker.rank}/{tau} after {stats.point_additions} additions (budget {budget})",
            stats,
        )
    system = RelationSystem(ZnMatrix(table.rows, n), tuple(table.rhs))
    logger.debug("tau=%d n=%d: %d relations from %d additions", tau, n, system.t, stats.point_additions)
    return system, stats


def _independent_rows(T: ZnMatrix, q: int) -> list[int]:
    tracker = _RankTracker(q, T.cols)
    chosen = []
    for i, row in enumerate(T.tolist()):
        if tracker.add(row):
            chosen.append(i)
            if tracker.rank == T.cols:
                break
    return chosen


def solve_logs(
    system: RelationSystem,
    curve: CurveParams,
    targets: Sequence[Point],
    counter: Optional[OpCounter] = None,
) -> tuple[int, ...]:
    """Logarithms n_i with n_i * P = P_i from a relation system of full rank.

    Picks tau rows independent mod p', inverts them over the largest Z/mZ
    where the determinant is a unit, then lifts each a_i (mod m) to Z/nZ by
    matching P_i - a_i P against +-j*(mP) for 0 <= j <= (n/m)/2.
    """
    targets = tuple(targets)
    tau, n = len(targets), curve.n
    rows = _independent_rows(system.T, curve.p_prime)
    if len(rows) < tau:
        raise RankDeficientError(f"relations have rank {len(rows)} < {tau} mod {curve.p_prime}")
    T_rows = system.T.tolist()
    sub = ZnMatrix([T_rows[i] for i in rows], n)
    v = ZnMatrix.column([system.v[i] for i in rows], n)
    try:
        inv = invert_mod(sub)
    except NoInverseError as exc:
        raise RankDeficientError(str(exc)) from exc
    m = inv.modulus
    residues = (inv @ v.reduce(m)).flat()
    if m == n:
        logs = residues
    else:
        logs = _lift_logs(residues, m, curve, targets, counter)
    for k, P in zip(logs, targets):
        if scalar_mul(k, curve.generator, curve) != P:
            raise InconsistentRelationsError(f"log {k} does not map the generator to {P}")
    logger.debug("det=%d, solved mod %d of %d", det_mod(sub), m, n)
    return tuple(logs)


def _lift_logs(residues, m, curve, targets, counter):
    n, p, a, G = curve.n, curve.p, curve.a, curve.generator
    h = n // m
    step = scalar_mul(m, G, curve, counter)
    # multiples[j] = j*m*P for 0 <= j <= h/2; the rest are their negatives.
    multiples = {None: 0}
    R = None
    for j in range(1, h // 2 + 1):
        R = _add(R, step, p, a)
        if counter is not None:
            counter.adds += 1
        multiples.setdefault(R, j)
    logs = []
    for a_i, P in zip(residues, targets):
        diff = _add(P, point_neg(scalar_mul(a_i, G, curve, counter), curve), p, a)
        if counter is not None:
            counter.adds += 1
        if diff in multiples:
            logs.append((a_i + multiples[diff] * m) % n)
        elif point_neg(diff, curve) in multiples:
            logs.append((a_i - multiples[point_neg(diff, curve)] * m) % n)
        else:
            raise InconsistentRelationsError(f"no lift of {a_i} mod {m} matches {P}")
    return logs


def solve_many_logs(
    targets: Sequence[Point],
    curve: CurveParams,
    seed: int | random.Random = 0,
    budget_mult: float = 64,
    max_retries: int = 3,
    threads: int = 1,
) -> tuple[tuple[int, ...], MdlpStats]:
    """collect_relations + solve_logs, recollecting with fresh seeds on failure."""
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    total = MdlpStats()
    for attempt in range(max_retries + 1):
        system, stats = collect_relations(targets, curve, rng, budget_mult=budget_mult, threads=threads)
        counter = OpCounter()
        total.merge(stats)
        try:
            logs = solve_logs(system, curve, targets, counter)
        except (RankDeficientError, InconsistentRelationsError) as exc:
            logger.info("attempt %d failed: %s", attempt, exc)
            total.retries += 1
            total.point_additions += counter.adds
            continue
        total.point_additions += counter.adds
        return logs, total
    raise InconsistentRelationsError(f"no consistent solution after {max_retries} retries")


# -- birthday-problem predictor --------------------------------------------

def _log_poisson_term(i: int, lam: float) -> float:
    return i * math.log(lam) - lam - math.lgamma(i + 1)


def poisson_collision_prob(alpha: int, n: int, tau: int) -> float:
    """P(W >= tau) for W ~ Poisson(binom(alpha, 2) / n).

    Sums whichever tail is smaller in log space, so both the rare-collision
    limit and large lambda stay accurate.
    """
    if alpha < 2:
        return 0.0 if tau > 0 else 1.0
    if tau <= 0:
        return 1.0
    lam = alpha * (alpha - 1) / (2 * n)
    if lam < tau:
        # Upper tail directly; terms decrease from i = tau on.
        logs = []
        i = tau
        while True:
            t = _log_poisson_term(i, lam)
            logs.append(t)
            if i > lam and t < logs[0] - 40:
                break
            i += 1
        top = max(logs)
        return min(1.0, math.exp(top) * math.fsum(math.exp(t - top) for t in logs))
    logs = [_log_poisson_term(i, lam) for i in range(tau)]
    top = max(logs)
    log_cdf = top + math.log(math.fsum(math.exp(t - top) for t in logs))
    return -math.expm1(log_cdf)


def min_walks(n: int, tau: int) -> int:
    """Smallest alpha with poisson_collision_prob(alpha, n, tau) > 1/2."""
    alpha = max(2, math.ceil(math.sqrt(2 * tau * n)))
    while poisson_collision_prob(alpha, n, tau) <= 0.5:
        alpha += 1
    while alpha > 2 and poisson_collision_prob(alpha - 1, n, tau) > 0.5:
        alpha -= 1
    return alpha


def gl_invertibility_prob(tau: int, p: int) -> float:
    """Fraction of tau x tau matrices over F_p that are invertible."""
    return math.prod(1 - p ** -i for i in range(1, tau + 1))


def empirical_collision_prob(alpha: int, n: int, tau: int, trials: int, rng: np.random.Generator) -> float:
    """Monte-Carlo P(W >= tau), W = number of equal pairs among alpha uniform draws."""
    hits = 0
    chunk = max(1, min(trials, 2_000_000 // max(alpha, 1)))
    done = 0
    while done < trials:
        size = min(chunk, trials - done)
        draws = np.sort(rng.integers(0, n, size=(size, alpha)), axis=1)
        pairs = np.zeros(size, dtype=np.int64)
        k = 1
        # Sorted rows: positions i and i+k match only inside a run, so summing
        # over k counts every equal pair exactly once.
        while k < alpha:
            eq = draws[:, k:] == draws[:, :-k]
            c = eq.sum(axis=1)
            if not c.any():
                break
            pairs += c
            k += 1
        hits += int((pairs >= tau).sum())
        done += size
    return hits / trials


def calibration_table(
    n: int,
    tau: int,
    trials: int,
    seed: int = 0,
    alphas: Optional[Sequence[int]] = None,
) -> list[tuple[int, float, float, float]]:
    """Rows (alpha, empirical, predicted, |difference|) over an alpha grid."""
    rng = np.random.default_rng(seed)
    if alphas is None:
        centre = min_walks(n, tau)
        lo = max(2, int(centre * 0.5))
        hi = int(centre * 1.6) + 2
        step = max(1, (hi - lo) // 16)
        alphas = list(range(lo, hi + 1, step))
    rows = []
    for alpha in alphas:
        emp = empirical_collision_prob(alpha, n, tau, trials, rng)
        pred = poisson_collision_prob(alpha, n, tau)
        rows.append((alpha, emp, pred, abs(emp - pred)))
    return rows
