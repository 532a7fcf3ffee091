"""Recover the CFVZ shared secret from public data only.

1. Lift the public point matrices to Z/nZ by solving all their entries'
   logarithms in one batch.
2. Find coefficients a_1..a_{r+s-1} with C_k = sum a_i C_i.
3. Evaluate the same linear form on the corner sequence of Bob's key.
4. Map back to points.

``run_attack_3rs`` lifts Pi, Pi_k and Pi_l (3rs logarithms) and does step 3
over Z/nZ.  ``run_attack_2rs`` skips Pi_l, runs the corner recurrence on
Bob's points directly and pays for it in point additions.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from itertools import islice
from typing import Optional, Sequence

from .cfvz import (
    BlockElement,
    KeyExchangeTranscript,
    PointMatrix,
    apply_to_generator,
    corner_sequence,
)
from .curve import CurveParams, OpCounter, multi_scalar_mul
from .mdlp import MdlpStats, solve_many_logs
from .modring import NoSolutionError, ZnMatrix, solve_linear

logger = logging.getLogger(__name__)

__all__ = [
    "THREE_RS",
    "TWO_RS",
    "AttackError",
    "AttackInput",
    "AttackReport",
    "lift_point_matrix",
    "lift_point_matrices",
    "solve_coefficients",
    "evaluate_form",
    "run_attack",
    "run_attack_3rs",
    "run_attack_2rs",
    "verify_report",
]

THREE_RS = "three_rs"
TWO_RS = "two_rs"


class AttackError(ArithmeticError):
    """The lifted matrices are inconsistent with the public element."""


@dataclass(frozen=True)
class AttackInput:
    curve: CurveParams
    A: ZnMatrix
    B: ZnMatrix
    base: PointMatrix
    alice_public: PointMatrix
    bob_public: PointMatrix

    def __post_init__(self):
        r, s = self.base.shape
        if self.A.shape != (r, r) or self.B.shape != (s, s):
            raise ValueError("A, B and Pi shapes do not fit")
        if self.alice_public.shape != (r, s) or self.bob_public.shape != (r, s):
            raise ValueError("public keys must have the shape of Pi")

    @classmethod
    def from_transcript(cls, tr: KeyExchangeTranscript) -> "AttackInput":
        """Public part of a transcript; the private keys and secret stay behind."""
        return cls(tr.curve, tr.base.A, tr.base.B, tr.base.block, tr.alice_public, tr.bob_public)

    @property
    def r(self) -> int:
        return self.base.rows

    @property
    def s(self) -> int:
        return self.base.cols


@dataclass
class AttackReport:
    recovered_secret: PointMatrix
    coefficients: tuple[int, ...]
    dlp_count: int
    stats: MdlpStats
    variant: str
    succeeded: bool
    # Group operations spent after the logarithms (steps 2-4).
    final_additions: int = 0

    @property
    def step1_additions(self) -> int:
        return self.stats.point_additions

    @property
    def total_additions(self) -> int:
        return self.stats.point_additions + self.final_additions


def lift_point_matrices(
    matrices: Sequence[PointMatrix],
    curve: CurveParams,
    seed: int | random.Random = 0,
    budget_mult: float = 64,
    max_retries: int = 3,
    threads: int = 1,
) -> tuple[list[ZnMatrix], MdlpStats]:
    """Residue matrices C with C P = Pi, all entries solved in one batch."""
    targets = [P for M in matrices for P in M.flat()]
    logs, stats = solve_many_logs(targets, curve, seed, budget_mult, max_retries, threads)
    out, pos = [], 0
    for M in matrices:
        size = M.rows * M.cols
        chunk = logs[pos:pos + size]
        out.append(ZnMatrix([chunk[i * M.cols:(i + 1) * M.cols] for i in range(M.rows)], curve.n))
        pos += size
    return out, stats


def lift_point_matrix(Pi: PointMatrix, curve: CurveParams, seed: int | random.Random = 0, **kw) -> ZnMatrix:
    (C,), _ = lift_point_matrices([Pi], curve, seed, **kw)
    return C


def solve_coefficients(A: ZnMatrix, B: ZnMatrix, C: ZnMatrix, C_k: ZnMatrix) -> tuple[int, ...]:
    """Some (a_1..a_{r+s-1}) with C_k = sum a_i C_i, free variables zero."""
    r, s, n = A.rows, B.rows, A.modulus
    count = r + s - 1
    seq = list(islice(corner_sequence(BlockElement(A, C, B)), 1, count + 1))
    columns = [Ci.flat() for Ci in seq]
    T = ZnMatrix([[col[e] for col in columns] for e in range(r * s)], n)
    try:
        sol = solve_linear(T, C_k.flat())
    except NoSolutionError as exc:
        raise AttackError("C_k is not a combination of C_1..C_{r+s-1}; the lift is wrong") from exc
    a = sol.solution
    combo = ZnMatrix.zeros(r, s, n)
    for ai, Ci in zip(a, seq):
        combo = combo + Ci.scale(ai)
    if combo != C_k:
        raise AttackError("solver returned a vector that does not reproduce C_k")
    return a


def evaluate_form(coefficients: Sequence[int], terms: Sequence[ZnMatrix]) -> ZnMatrix:
    """sum a_i X_i over Z/nZ."""
    out = terms[0].scale(coefficients[0])
    for a, X in zip(coefficients[1:], terms[1:]):
        out = out + X.scale(a)
    return out


def run_attack_3rs(inp: AttackInput, seed: int | random.Random = 0, budget_mult: float = 64,
                   max_retries: int = 3, threads: int = 1) -> AttackReport:
    """Lift all three public matrices (tau = 3rs) and finish over Z/nZ."""
    curve, A, B = inp.curve, inp.A, inp.B
    (C, C_k, C_l), stats = lift_point_matrices(
        [inp.base, inp.alice_public, inp.bob_public], curve, seed, budget_mult, max_retries, threads)
    a = solve_coefficients(A, B, C, C_k)
    count = len(a)
    bob_seq = list(islice(corner_sequence(BlockElement(A, C_l, B)), 1, count + 1))
    secret_residues = evaluate_form(a, bob_seq)
    counter = OpCounter()
    secret = apply_to_generator(secret_residues, curve.generator, curve, counter)
    logger.info("3rs attack: %d logs, %d + %d additions", 3 * inp.r * inp.s, stats.point_additions, counter.adds)
    return AttackReport(secret, a, 3 * inp.r * inp.s, stats, THREE_RS, True, counter.adds)


def run_attack_2rs(inp: AttackInput, seed: int | random.Random = 0, budget_mult: float = 64,
                   max_retries: int = 3, threads: int = 1) -> AttackReport:
    """Lift Pi and Pi_k only (tau = 2rs); run the recurrence on Bob's points."""
    curve, A, B = inp.curve, inp.A, inp.B
    (C, C_k), stats = lift_point_matrices(
        [inp.base, inp.alice_public], curve, seed, budget_mult, max_retries, threads)
    a = solve_coefficients(A, B, C, C_k)
    count = len(a)
    counter = OpCounter()
    bob_seq = list(islice(corner_sequence(BlockElement(A, inp.bob_public, B), counter), 1, count + 1))
    flat = [
        multi_scalar_mul(a, [X.flat()[e] for X in bob_seq], curve, counter)
        for e in range(inp.r * inp.s)
    ]
    secret = PointMatrix.from_flat(flat, inp.r, inp.s, curve)
    logger.info("2rs attack: %d logs, %d + %d additions", 2 * inp.r * inp.s, stats.point_additions, counter.adds)
    return AttackReport(secret, a, 2 * inp.r * inp.s, stats, TWO_RS, True, counter.adds)


def run_attack(inp: AttackInput, variant: str = THREE_RS, **kw) -> AttackReport:
    if variant in (THREE_RS, "3rs"):
        return run_attack_3rs(inp, **kw)
    if variant in (TWO_RS, "2rs"):
        return run_attack_2rs(inp, **kw)
    raise ValueError(f"unknown variant {variant!r}")


def verify_report(report: AttackReport, honest: KeyExchangeTranscript) -> bool:
    return report.recovered_secret == honest.shared
