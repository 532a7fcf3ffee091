"""Command-line experiment driver.

    cfvz-lab gen-params  --p 17 --a 2 --b 2 --out params.json
    cfvz-lab keyexchange --params params.json --r 2 --s 2 --seed 1 --out trace.json
    cfvz-lab attack trace.json --variant 3rs --seed 7 --out report.json
    cfvz-lab calibrate --n 10000 --tau 12 --trials 10000 --out calib.csv
    cfvz-lab bench --min-order 1000 --max-order 1100 --r 2 --s 2 --trials 20

Every command is a deterministic function of its inputs and ``--seed``.
Diagnostics go to stderr at the level named by CFVZ_LAB_LOG
(quiet, info or debug); result files never contain log text.

Exit codes: 0 success, 2 verification failure, 3 budget exhausted,
4 bad input.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import random
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from . import formats
from .attack import THREE_RS, TWO_RS, AttackError, AttackInput, run_attack, verify_report
from .cfvz import ParameterError, random_block_element, run_key_exchange
from .curve import CurveError, CurveParams, NotCyclicError, make_curve_params, random_curve
from .mdlp import BudgetExhausted, MdlpError, calibration_table

logger = logging.getLogger("cfvz_lab")

EXIT_OK = 0
EXIT_VERIFY = 2
EXIT_BUDGET = 3
EXIT_INPUT = 4

VARIANTS = {"3rs": THREE_RS, "2rs": TWO_RS, THREE_RS: THREE_RS, TWO_RS: TWO_RS}


class InputError(ValueError):
    pass


@dataclass(frozen=True)
class CurveSpec:
    """Either an explicit curve (p, a, b) or a search over an order range."""

    p: Optional[int] = None
    a: Optional[int] = None
    b: Optional[int] = None
    min_order: int = 1000
    max_order: int = 2000
    max_cofactor: int = 1
    min_cofactor: int = 1

    @property
    def explicit(self) -> bool:
        return self.p is not None


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    curve: CurveSpec = CurveSpec()
    r: int = 2
    s: int = 2
    variant: str = THREE_RS
    trials: int = 1
    step_budget_multiplier: Fraction = Fraction(64)

    def __post_init__(self):
        if self.r < 1 or self.s < 1:
            raise InputError("r and s must be at least 1")
        if self.trials < 1:
            raise InputError("trials must be at least 1")
        if self.variant not in (THREE_RS, TWO_RS):
            raise InputError(f"unknown variant {self.variant}")


def _configure_logging() -> None:
    level = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("CFVZ_LAB_LOG", "quiet").lower(), logging.WARNING)
    if not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        logger.addHandler(handler)
    logger.setLevel(level)


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def make_curve(spec: CurveSpec, seed: int) -> CurveParams:
    rng = random.Random(seed)
    if spec.explicit:
        return make_curve_params(spec.p, spec.a, spec.b, rng)
    return random_curve(rng, spec.min_order, spec.max_order, spec.max_cofactor, spec.min_cofactor)


def predicted_cost(n: int, tau: int) -> float:
    return math.sqrt(2 * tau * n)


# -- commands ---------------------------------------------------------------

def cmd_gen_params(spec: CurveSpec, seed: int) -> dict:
    return formats.params_doc(make_curve(spec, seed))


def cmd_keyexchange(curve: CurveParams, r: int, s: int, seed: int) -> dict:
    rng = random.Random(seed)
    base = random_block_element(curve, r, s, rng)
    k, l = rng.randrange(1, curve.n), rng.randrange(1, curve.n)
    return formats.trace_doc(run_key_exchange(curve, base, k, l), seed)


def cmd_attack(trace: dict, variant: str, seed: int, budget_mult: float = 64, threads: int = 1) -> tuple[dict, str, int]:
    """Returns (report document, human summary, exit code)."""
    honest = formats.trace_from_doc(trace)
    inp = AttackInput.from_transcript(honest)
    curve = honest.curve
    tau = (3 if variant == THREE_RS else 2) * inp.r * inp.s
    predicted = predicted_cost(curve.n, tau)
    try:
        report = run_attack(inp, variant, seed=seed, budget_mult=budget_mult, threads=threads)
    except AttackError as exc:
        doc = {"format": formats.REPORT, "version": formats.VERSION, "variant": variant,
               "succeeded": False, "verified": False, "error": str(exc), "dlp_count": tau,
               "predicted": predicted}
        return doc, f"succeeded=false verified=false dlp_count={tau} error={exc}\n", EXIT_VERIFY
    verified = verify_report(report, honest)
    doc = formats.report_doc(report, verified, predicted)
    summary = (
        f"succeeded={str(report.succeeded).lower()} verified={str(verified).lower()} "
        f"dlp_count={report.dlp_count} point_additions={report.stats.point_additions} "
        f"predicted={predicted:.1f} ratio={report.stats.point_additions / predicted:.3f}\n"
    )
    return doc, summary, EXIT_OK if verified else EXIT_VERIFY


def cmd_calibrate(n: int, tau: int, trials: int, seed: int, alphas: Optional[Sequence[int]] = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha", "empirical", "predicted", "abs_diff"])
    for alpha, emp, pred, diff in calibration_table(n, tau, trials, seed, alphas):
        w.writerow([alpha, f"{emp:.6f}", f"{pred:.6f}", f"{diff:.6f}"])
    return buf.getvalue()


BENCH_HEADER = ["seed", "n", "r", "s", "variant", "dlp_count", "walks", "point_additions", "predicted", "succeeded"]


def cmd_bench(config: ExperimentConfig, curve: Optional[CurveParams] = None, threads: int = 1) -> str:
    """One CSV row per trial: fresh key exchange, then the configured attack."""
    curve = curve or make_curve(config.curve, config.seed)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_HEADER)
    tau = (3 if config.variant == THREE_RS else 2) * config.r * config.s
    for t in range(config.trials):
        seed = config.seed + t
        rng = random.Random(seed)
        base = random_block_element(curve, config.r, config.s, rng)
        honest = run_key_exchange(curve, base, rng.randrange(1, curve.n), rng.randrange(1, curve.n))
        try:
            report = run_attack(AttackInput.from_transcript(honest), config.variant, seed=seed,
                                budget_mult=float(config.step_budget_multiplier), threads=threads)
            walks, adds, ok = report.stats.walks_generated, report.stats.point_additions, verify_report(report, honest)
        except BudgetExhausted as exc:
            walks, adds, ok = exc.stats.walks_generated, exc.stats.point_additions, False
        w.writerow([seed, curve.n, config.r, config.s, config.variant, tau, walks, adds,
                    f"{predicted_cost(curve.n, tau):.1f}", str(ok).lower()])
    return buf.getvalue()


# -- argument parsing ---------------------------------------------------------

def _add_curve_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--p", type=int, help="field prime (explicit curve)")
    p.add_argument("--a", type=int, help="coefficient a (explicit curve)")
    p.add_argument("--b", type=int, help="coefficient b (explicit curve)")
    p.add_argument("--min-order", type=int, default=1000)
    p.add_argument("--max-order", type=int, default=2000)
    p.add_argument("--max-cofactor", type=int, default=1)
    p.add_argument("--min-cofactor", type=int, default=1)


def _curve_spec(args) -> CurveSpec:
    explicit = [args.p, args.a, args.b]
    if any(v is not None for v in explicit) and not all(v is not None for v in explicit):
        raise InputError("--p, --a and --b must be given together")
    if args.min_order > args.max_order or args.min_cofactor > args.max_cofactor:
        raise InputError("empty order or cofactor range")
    return CurveSpec(args.p, args.a, args.b, args.min_order, args.max_order, args.max_cofactor, args.min_cofactor)


def _budget(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text}") from exc
    if value <= 0:
        raise argparse.ArgumentTypeError("budget multiplier must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cfvz-lab", description=__doc__.split("\n")[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--threads", type=int, default=1, help="walk workers for relation collection")
    common.add_argument("--variant", choices=sorted(VARIANTS), default="3rs")
    common.add_argument("--budget-mult", type=_budget, default=Fraction(64))
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-params", parents=[common], help="find a cyclic curve")
    _add_curve_args(g)

    k = sub.add_parser("keyexchange", parents=[common], help="run the key exchange")
    k.add_argument("--params", required=True)
    k.add_argument("--r", type=int, default=2)
    k.add_argument("--s", type=int, default=2)

    a = sub.add_parser("attack", parents=[common], help="recover the shared secret from a trace")
    a.add_argument("trace")

    c = sub.add_parser("calibrate", parents=[common], help="check the Poisson collision predictor")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--tau", type=int, required=True)
    c.add_argument("--trials", type=int, default=10_000)
    c.add_argument("--alphas", type=lambda t: [int(x) for x in t.split(",")], help="comma-separated grid")

    b = sub.add_parser("bench", parents=[common], help="repeated key exchange + attack, CSV out")
    _add_curve_args(b)
    b.add_argument("--params", help="curve parameter file (overrides the search flags)")
    b.add_argument("--r", type=int, default=2)
    b.add_argument("--s", type=int, default=2)
    b.add_argument("--trials", type=int, default=10)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen-params":
            _emit(formats.dumps(cmd_gen_params(_curve_spec(args), args.seed)), args.out)
        elif args.command == "keyexchange":
            if args.r < 1 or args.s < 1:
                raise InputError("r and s must be at least 1")
            curve = formats.params_from_doc(formats.read(args.params, formats.PARAMS))
            _emit(formats.dumps(cmd_keyexchange(curve, args.r, args.s, args.seed)), args.out)
        elif args.command == "attack":
            trace = formats.read(args.trace, formats.TRACE)
            doc, summary, code = cmd_attack(trace, VARIANTS[args.variant], args.seed,
                                            float(args.budget_mult), args.threads)
            if args.out:
                formats.write(doc, args.out)
            sys.stdout.write(summary)
            return code
        elif args.command == "calibrate":
            if args.n < 1 or args.tau < 1 or args.trials < 1:
                raise InputError("n, tau and trials must be positive")
            _emit(cmd_calibrate(args.n, args.tau, args.trials, args.seed, args.alphas), args.out)
        elif args.command == "bench":
            config = ExperimentConfig(args.seed, _curve_spec(args), args.r, args.s, VARIANTS[args.variant],
                                      args.trials, args.budget_mult)
            curve = formats.params_from_doc(formats.read(args.params, formats.PARAMS)) if args.params else None
            _emit(cmd_bench(config, curve, args.threads), args.out)
    except BudgetExhausted as exc:
        logger.error("%s", exc)
        return EXIT_BUDGET
    except (InputError, formats.FormatError, CurveError, NotCyclicError, ParameterError) as exc:
        logger.error("bad input: %s", exc)
        return EXIT_INPUT
    except MdlpError as exc:
        logger.error("%s", exc)
        return EXIT_VERIFY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
