"""JSON/CSV emission helpers shared by the reports and the CLI.

Exact rationals serialize as {"num": ..., "den": ...} decimal digit
strings of arbitrary length; floats use the shortest round-trip decimal.
JSON key order is construction order, so re-reading and re-serializing a
file is byte-identical.  CSV uses RFC-4180 CRLF line endings and fixed
header strings.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
from fractions import Fraction


def encode(value):
    """Recursively convert a result object into JSON-ready primitives."""
    if isinstance(value, Fraction):
        return {"num": str(value.numerator), "den": str(value.denominator)}
    if isinstance(value, bool) or value is None or isinstance(value, (int, float, str)):
        return value
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: encode(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, dict):
        return {_key(k): encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, frozenset, set)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [encode(v) for v in items]
    raise TypeError(f"cannot encode {type(value).__name__} for JSON output")


def _key(k) -> str:
    if isinstance(k, str):
        return k
    if isinstance(k, (int, float)):
        return str(k)
    if isinstance(k, tuple):
        return ",".join(str(x) for x in k)
    raise TypeError(f"cannot encode mapping key {k!r}")


def dumps(obj) -> str:
    return json.dumps(encode(obj), indent=2, ensure_ascii=False) + "\n"


def dumps_line(obj) -> str:
    """Compact single-line JSON, for JSON-lines dumps."""
    return json.dumps(encode(obj), separators=(",", ":"), ensure_ascii=False) + "\n"


SWEEP_HEADER = ["n", "p", "pe", "exponent"]
BOUNDS_HEADER = ["p", "n", "f_fb", "e2", "e3", "upper", "lower"]


def csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)  # default dialect: RFC-4180 CRLF
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()
