"""Bound reports and deterministic serialization.

Verdict policy (shared by every checker):

* exact sides (no stderr): PASS iff margin >= -1e-9 * scale, else FAIL,
  with scale = max(1, |lhs|, |rhs|);
* statistical sides: PASS iff margin >= -3*stderr; a worse margin is
  INCONCLUSIVE when the noise band 3*stderr exceeds a tenth of the scale
  (the sample cannot resolve the claim), FAIL otherwise.

JSON reports are byte-deterministic: dictionary keys are sorted and every
float is rendered with 17 significant digits, so identical configs produce
identical bytes.  Non-finite floats are rendered as the strings "inf",
"-inf", "nan" (JSON has no literals for them).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

PASS = "PASS"
FAIL = "FAIL"
INCONCLUSIVE = "INCONCLUSIVE"

_EXACT_RTOL = 1e-9


def _scale(lhs: float, rhs: float) -> float:
    return max(1.0, abs(lhs), abs(rhs))


def verdict_for(lhs: float, rhs: float, stderr: float | None) -> str:
    margin = rhs - lhs
    if not stderr:
        return PASS if margin >= -_EXACT_RTOL * _scale(lhs, rhs) else FAIL
    if margin >= -3.0 * stderr:
        return PASS
    return INCONCLUSIVE if 3.0 * stderr > 0.1 * _scale(lhs, rhs) else FAIL


@dataclass
class BoundReport:
    """One inequality check: lhs <= rhs with exact or statistical sides."""

    name: str
    lhs: float
    rhs: float
    lhs_stderr: float | None = None
    n: int | None = None
    paths: int | None = None
    seed: int | None = None
    notes: dict = field(default_factory=dict)
    margin: float = field(init=False)
    verdict: str = field(init=False)

    def __post_init__(self):
        self.lhs = float(self.lhs)
        self.rhs = float(self.rhs)
        self.margin = self.rhs - self.lhs
        self.verdict = verdict_for(self.lhs, self.rhs, self.lhs_stderr)

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "lhs": self.lhs,
            "lhs_stderr": self.lhs_stderr,
            "rhs": self.rhs,
            "margin": self.margin,
            "verdict": self.verdict,
        }
        for k in ("n", "paths", "seed"):
            v = getattr(self, k)
            if v is not None:
                out[k] = v
        if self.notes:
            out["notes"] = dict(self.notes)
        return out

    def csv_row(self):
        return (self.name, self.n, self.lhs, self.lhs_stderr, self.rhs,
                self.margin, self.verdict)


BOUND_CSV_HEADER = ("name", "n", "lhs", "stderr", "rhs", "margin", "verdict")


def overall_verdict(verdicts) -> str:
    worst = PASS
    for v in verdicts:
        if v == FAIL:
            return FAIL
        if v == INCONCLUSIVE:
            worst = INCONCLUSIVE
    return worst


# ---------------------------------------------------------------------------
# canonical serialization
# ---------------------------------------------------------------------------

def format_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _json_atom(obj) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return format_float(x)
        return '"%s"' % format_float(x)
    if isinstance(obj, str):
        import json as _json
        return _json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj)!r}")


def dumps_canonical(obj, indent: int = 0) -> str:
    """JSON text with sorted keys and 17-significant-digit floats."""
    pad = " " * indent
    inner = " " * (indent + 2)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for k in sorted(obj):
            items.append(f'{inner}"{k}": {dumps_canonical(obj[k], indent + 2)}')
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else list(obj)
        if not seq:
            return "[]"
        items = [f"{inner}{dumps_canonical(v, indent + 2)}" for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    return _json_atom(obj)


def write_report_json(path, document: dict) -> None:
    text = dumps_canonical(document) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format_float(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_csv_cell(v) for v in row])
