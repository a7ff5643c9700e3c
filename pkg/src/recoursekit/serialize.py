"""Canonical JSON serialization for reports.

Reports must be byte-identical across runs and platforms, so floats are
rendered with a fixed rule (shortest round-trip representation, capped at 12
significant digits) and object keys are emitted in sorted order.
"""

from __future__ import annotations

import math
import re
from typing import Any

from .errors import InputError

_SIG_DIGITS = 12
_DIGIT_RUN = re.compile(r"\d")


def format_float(value: float) -> str:
    """Render a float deterministically for report output."""
    v = float(value)
    if not math.isfinite(v):
        raise InputError(f"non-finite value {v!r} cannot be serialized")
    if v == 0.0:
        return "0"
    s = repr(v)
    digits = len(_DIGIT_RUN.findall(s.split("e")[0].split("E")[0]))
    if digits > _SIG_DIGITS:
        s = f"{v:.{_SIG_DIGITS}g}"
    return s


def dumps_canonical(obj: Any, *, indent: int = 2) -> str:
    """Serialize to JSON with sorted keys and fixed float formatting."""
    out: list[str] = []
    _write(obj, out, indent, 0)
    out.append("\n")
    return "".join(out)


def _write(obj: Any, out: list[str], indent: int, depth: int) -> None:
    pad = " " * (indent * (depth + 1))
    close_pad = " " * (indent * depth)
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, str):
        out.append(_escape(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(format_float(obj))
    elif isinstance(obj, dict):
        keys = list(obj.keys())
        if any(not isinstance(k, str) for k in keys):
            raise InputError("JSON object keys must be strings")
        if not keys:
            out.append("{}")
            return
        out.append("{\n")
        for i, k in enumerate(sorted(keys)):
            out.append(f"{pad}{_escape(k)}: ")
            _write(obj[k], out, indent, depth + 1)
            out.append(",\n" if i < len(keys) - 1 else "\n")
        out.append(f"{close_pad}}}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        out.append("[\n")
        for i, v in enumerate(obj):
            out.append(pad)
            _write(v, out, indent, depth + 1)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(f"{close_pad}]")
    else:
        # numpy scalars and similar duck-typed numbers
        if hasattr(obj, "item"):
            _write(obj.item(), out, indent, depth)
        else:
            raise InputError(f"cannot serialize object of type {type(obj).__name__}")


def _escape(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\t":
            out.append("\\t")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)
