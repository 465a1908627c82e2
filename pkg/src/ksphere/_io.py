"""Deterministic text serialization: 17 significant digits for every float."""

from __future__ import annotations

import csv
import io
import math
from typing import Any, Iterable, Mapping

import numpy as np


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    if x == 0:
        x = 0.0  # drop the sign of negative zero
    return format(x, ".17g")


def fmt_complex(z: complex) -> str:
    """``a+bi`` with both parts at 17 significant digits."""
    z = complex(z)
    im = z.imag if z.imag != 0 else 0.0
    sign = "-" if math.copysign(1.0, im) < 0 else "+"
    return f"{fmt_float(z.real)}{sign}{fmt_float(abs(im))}i"


def _plain(obj: Any) -> Any:
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    return obj


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON text with floats at 17 significant digits and complex values as ``{re, im}``."""
    obj = _plain(obj)
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return '"' + fmt_float(obj) + '"'
        return fmt_float(obj)
    if isinstance(obj, complex):
        return dumps({"re": obj.real, "im": obj.imag}, indent, _level)
    if isinstance(obj, str):
        import json

        return json.dumps(obj)
    if isinstance(obj, Mapping):
        if not obj:
            return "{}"
        items = [f"{pad}{dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(_plain(v), (Mapping, list, tuple, complex)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def cell(v: Any) -> str:
    v = _plain(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt_float(v)
    if isinstance(v, complex):
        return fmt_complex(v)
    if v is None:
        return ""
    if isinstance(v, (list, tuple)):
        return " ".join(cell(x) for x in v)
    return str(v)


def rows_to_csv(rows: Iterable[Mapping[str, Any]]) -> str:
    rows = list(rows)
    if not rows:
        return ""
    header: list[str] = []
    for row in rows:
        for key in row:
            if key not in header:
                header.append(key)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([cell(row.get(h)) for h in header])
    return buf.getvalue()
