"""JSON documents for curve parameters, key-exchange traces and attack reports.

Every file is one UTF-8 JSON object with a ``format`` tag and a
``version``.  Points are ``{"x": .., "y": ..}`` or the string ``"inf"``;
matrices are row-major lists of lists.  Output is key-sorted and
indented so identical inputs give byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .attack import AttackReport
from .cfvz import BlockElement, KeyExchangeTranscript, PointMatrix
from .curve import CurveParams, Point
from .mdlp import MdlpStats
from .modring import ZnMatrix

VERSION = 1
PARAMS = "cfvz-lab/params"
TRACE = "cfvz-lab/trace"
REPORT = "cfvz-lab/report"


class FormatError(ValueError):
    """A document is malformed or has the wrong format tag."""


def point_to_json(P: Point) -> Any:
    return "inf" if P is None else {"x": P[0], "y": P[1]}


def point_from_json(obj: Any) -> Point:
    if obj == "inf":
        return None
    try:
        return (int(obj["x"]), int(obj["y"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad point {obj!r}") from exc


def curve_to_json(c: CurveParams) -> dict:
    return {
        "p": c.p, "a": c.a, "b": c.b, "n": c.n, "l": c.l, "p_prime": c.p_prime,
        "generator": point_to_json(c.generator),
    }


def curve_from_json(obj: dict) -> CurveParams:
    try:
        return CurveParams(
            int(obj["p"]), int(obj["a"]), int(obj["b"]),
            n=int(obj["n"]), l=int(obj["l"]), p_prime=int(obj["p_prime"]),
            generator=point_from_json(obj["generator"]),
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"bad curve record: {exc}") from exc


def points_to_json(M: PointMatrix) -> list:
    return [[point_to_json(P) for P in row] for row in M.entries]


def points_from_json(rows: list, curve: CurveParams) -> PointMatrix:
    M = PointMatrix(tuple(tuple(point_from_json(P) for P in row) for row in rows), curve)
    for P in M.flat():
        if not curve.contains(P):
            raise FormatError(f"{P} is not on the curve")
    return M


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write(doc: dict, path: str | Path) -> None:
    Path(path).write_text(dumps(doc), encoding="utf-8")


def read(path: str | Path, expected: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != expected:
        raise FormatError(f"{path} is not a {expected} document")
    if doc.get("version") != VERSION:
        raise FormatError(f"unsupported version {doc.get('version')}")
    return doc


def params_doc(curve: CurveParams) -> dict:
    return {"format": PARAMS, "version": VERSION, "curve": curve_to_json(curve)}


def params_from_doc(doc: dict) -> CurveParams:
    return curve_from_json(doc["curve"])


def trace_doc(tr: KeyExchangeTranscript, seed: int | None = None) -> dict:
    base = tr.base
    return {
        "format": TRACE,
        "version": VERSION,
        "seed": seed,
        "curve": curve_to_json(tr.curve),
        "r": base.r,
        "s": base.s,
        "A": base.A.tolist(),
        "B": base.B.tolist(),
        "Pi": points_to_json(base.block),
        "alice_secret": tr.alice_secret,
        "bob_secret": tr.bob_secret,
        "alice_public": points_to_json(tr.alice_public),
        "bob_public": points_to_json(tr.bob_public),
        "shared": points_to_json(tr.shared),
        "consistent": True,
    }


def trace_from_doc(doc: dict) -> KeyExchangeTranscript:
    try:
        curve = curve_from_json(doc["curve"])
        n = curve.n
        base = BlockElement(ZnMatrix(doc["A"], n), points_from_json(doc["Pi"], curve), ZnMatrix(doc["B"], n))
        return KeyExchangeTranscript(
            curve,
            base,
            int(doc["alice_secret"]),
            int(doc["bob_secret"]),
            points_from_json(doc["alice_public"], curve),
            points_from_json(doc["bob_public"], curve),
            points_from_json(doc["shared"], curve),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad trace: {exc}") from exc


def stats_to_json(st: MdlpStats) -> dict:
    return {
        "walks_generated": st.walks_generated,
        "point_additions": st.point_additions,
        "collisions_found": st.collisions_found,
        "retries": st.retries,
    }


def report_doc(report: AttackReport, verified: bool | None, predicted: float) -> dict:
    return {
        "format": REPORT,
        "version": VERSION,
        "variant": report.variant,
        "succeeded": report.succeeded,
        "verified": verified,
        "dlp_count": report.dlp_count,
        "coefficients": list(report.coefficients),
        "recovered_secret": points_to_json(report.recovered_secret),
        "stats": stats_to_json(report.stats),
        "final_additions": report.final_additions,
        "predicted": predicted,
        "ratio": report.stats.point_additions / predicted,
    }


def report_from_doc(doc: dict, curve: CurveParams) -> AttackReport:
    st = doc["stats"]
    return AttackReport(
        points_from_json(doc["recovered_secret"], curve),
        tuple(doc["coefficients"]),
        int(doc["dlp_count"]),
        MdlpStats(**{k: int(v) for k, v in st.items()}),
        doc["variant"],
        bool(doc["succeeded"]),
        int(doc["final_additions"]),
    )
