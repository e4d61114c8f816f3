"""Deterministic JSON output and parsing of rate/operator specifications."""

from __future__ import annotations

import json
import math
import re
from pathlib import Path

import numpy as np

from .errors import DomainError, InputError
from .operators import OperatorSpec, spec_from_dict
from .rates import PI, ExpRate, PolyRate, RateFunction, Tabulated, rate_from_dict


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in seq):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in seq) + "]"
        return "[" + pad + ("," + pad).join(_encode(v, indent, level + 1) for v in seq) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON with every float written to 17 significant digits.

    Non-finite floats become null. Key order is preserved.
    """
    return _encode(obj, indent, 0) + "\n"


_REAL = re.compile(r"^\s*([-+]?[\d.eE+-]*)\s*\*?\s*(pi)?\s*(?:/\s*([\d.eE+-]+))?\s*$")


def parse_real(text: str) -> float:
    """Float, optionally written with pi: ``0.5``, ``pi``, ``pi/4``, ``3*pi/8``."""
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    m = _REAL.match(text)
    if not m or not m.group(2):
        raise DomainError(f"cannot parse real number {text!r}")
    coef = m.group(1)
    value = (float(coef) if coef not in ("", "+", "-") else float(coef + "1")) * PI
    if m.group(3):
        value /= float(m.group(3))
    return value


def parse_list(text: str) -> list[float]:
    return [parse_real(tok) for tok in text.split(",") if tok.strip()]


def parse_rate(text: str) -> RateFunction:
    """``poly:C,alpha``, ``exp:alpha``, ``const:v``, a JSON object, or ``@file``."""
    text = text.strip()
    if text.startswith("@"):
        return rate_from_dict(json.loads(Path(text[1:]).read_text()))
    if text.startswith("{"):
        try:
            return rate_from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise DomainError(f"invalid rate JSON: {exc}") from exc
    name, _, params = text.partition(":")
    args = parse_list(params) if params else []
    try:
        if name == "poly":
            return PolyRate(*args) if len(args) == 2 else PolyRate(1.0, *args)
        if name == "exp":
            return ExpRate(*args)
        if name == "const":
            return Tabulated.constant(*args)
    except TypeError as exc:
        raise DomainError(f"wrong number of parameters in rate {text!r}") from exc
    raise DomainError(f"unknown rate specification {text!r}")


def load_operator(path) -> OperatorSpec:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read operator file {path}: {exc}") from exc
    return spec_from_dict(obj)
