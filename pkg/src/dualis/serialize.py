"""JSON helpers: 17-significant-digit floats and the ComplexMatrix encoding."""
from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .errors import InvariantError


def format_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def _emit(obj: Any, out: list, indent: int, level: int) -> None:
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    sep = "," if indent else ", "
    if obj is None or isinstance(obj, (bool, np.bool_)):
        out.append(json.dumps(None if obj is None else bool(obj)))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(sep)
            out.append(pad + json.dumps(str(k)) + ": ")
            _emit(v, out, indent, level + 1)
        out.append(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            out.append("[]")
            return
        out.append("[")
        flat = all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in items)
        for i, v in enumerate(items):
            if i:
                out.append(", " if flat else sep)
            if not flat:
                out.append(pad)
            _emit(v, out, indent, level + 1)
        out.append("]" if flat else end + "]")
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    """Deterministic JSON text; floats carry 17 significant digits, non-finite become null."""
    out: list = []
    _emit(obj, out, indent, 0)
    return "".join(out) + "\n"


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "re": [float(x) for x in m.real.ravel()],
        "im": [float(x) for x in m.imag.ravel()],
    }


def matrix_from_json(d: dict) -> np.ndarray:
    try:
        rows, cols = int(d["rows"]), int(d["cols"])
        re = np.asarray(d["re"], dtype=float)
        im = np.asarray(d.get("im", [0.0] * (rows * cols)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvariantError(f"malformed matrix JSON: {exc}") from exc
    if rows < 1 or cols < 1 or re.size != rows * cols or im.size != rows * cols:
        raise InvariantError("matrix JSON entry count does not match rows x cols")
    m = (re + 1j * im).reshape(rows, cols)
    if not np.all(np.isfinite(m)):
        raise InvariantError("matrix JSON has non-finite entries")
    return m
