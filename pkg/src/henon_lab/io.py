"""Lossless, deterministic text output."""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any

import numpy as np


def fmt(v: float) -> str:
    """17 significant digits; integers and non-finite values spelled plainly."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def _plain(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return fmt(v)
        return _Float(v)
    return obj


class _Float(float):
    def __repr__(self) -> str:
        return format(float(self), ".17g")


def dumps(obj: Any) -> str:
    """Canonical JSON: sorted keys, 17-digit floats, non-finite floats as strings."""
    return _dump(_plain(obj), 0) + "\n"


def _dump(o: Any, level: int) -> str:
    pad = "  " * (level + 1)
    end = "  " * level
    if isinstance(o, dict):
        if not o:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_dump(o[k], level + 1)}" for k in sorted(o)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(o, list):
        if not o:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in o):
            return "[" + ", ".join(_dump(v, level + 1) for v in o) + "]"
        return "[\n" + ",\n".join(pad + _dump(v, level + 1) for v in o) + "\n" + end + "]"
    if isinstance(o, _Float):
        return repr(o)
    if isinstance(o, float):
        return format(o, ".17g")
    return json.dumps(o)


def digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def csv_text(header: list[str], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) if not isinstance(v, str) else v for v in row))
    return "\n".join(lines) + "\n"
