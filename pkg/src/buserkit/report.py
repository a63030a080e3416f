"""CSV and JSON emission with the frozen column schemas."""

from __future__ import annotations

import csv
import io
import json
import math
import numbers
from typing import Iterable, Mapping, Sequence

import numpy as np

RECORD_COLUMNS = ("inequality_id", "worst_slack", "tolerance", "pass", "N", "dx", "dt", "notes")
BOUNDS_COLUMNS = ("regime", "K", "input_kind", "input", "cheeger_lower", "implicit",
                  "argmax_t", "explicit", "explicit_regime", "c")
SWEEP_COLUMNS = BOUNDS_COLUMNS + ("ratio",)
INVERT_COLUMNS = ("regime", "K", "input_kind", "input", "output_kind", "output")
KEY_VALUE_COLUMNS = ("quantity", "value", "notes")

__all__ = ["RECORD_COLUMNS", "BOUNDS_COLUMNS", "SWEEP_COLUMNS", "INVERT_COLUMNS",
           "KEY_VALUE_COLUMNS", "format_value", "to_csv", "to_json", "render"]


def format_value(value):
    """JSON-safe scalar: non-finite floats become ``"inf"``, ``"-inf"`` or ``"nan"``."""
    if value is None or isinstance(value, (bool, str)):
        return value
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, numbers.Integral):
        return int(value)
    try:
        x = float(value)
    except (TypeError, ValueError):
        return str(value)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _cell(value) -> str:
    value = format_value(value)
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _ordered(rows: Iterable[Mapping], columns: Sequence[str]) -> list:
    out = []
    for row in rows:
        missing = [c for c in columns if c not in row]
        if missing:
            raise KeyError(f"row lacks column(s) {missing}")
        out.append({c: format_value(row[c]) for c in columns})
    return out


def to_csv(rows: Iterable[Mapping], columns: Sequence[str]) -> str:
    """RFC-4180 CSV (CRLF line ends, minimal quoting) with a header row."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(columns)
    for row in _ordered(rows, columns):
        writer.writerow([_cell(row[c]) for c in columns])
    return buf.getvalue()


def to_json(rows: Iterable[Mapping], columns: Sequence[str]) -> str:
    """JSON array of objects keyed by ``columns``; stable under parse and re-dump."""
    return json.dumps(_ordered(rows, columns), indent=2, ensure_ascii=False,
                      allow_nan=False) + "\n"


def render(rows: Iterable[Mapping], columns: Sequence[str], fmt: str = "csv") -> str:
    if fmt == "csv":
        return to_csv(rows, columns)
    if fmt == "json":
        return to_json(rows, columns)
    raise ValueError(f"unknown format {fmt!r}")
