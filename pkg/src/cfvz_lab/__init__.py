"""Desk-scale implementation and cryptanalysis of the CFVZ matrix key exchange on elliptic curves."""

from .attack import AttackInput, AttackReport, run_attack_2rs, run_attack_3rs, verify_report
from .cfvz import BlockElement, KeyExchangeTranscript, PointMatrix, block_pow, run_key_exchange
from .curve import CurveParams, make_curve_params, random_curve
from .mdlp import collect_relations, min_walks, poisson_collision_prob, solve_logs
from .modring import ZnMatrix

__version__ = "0.1.0"
