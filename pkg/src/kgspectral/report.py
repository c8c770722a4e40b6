"""Structured results and deterministic JSON emission."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

SCHEMA_VERSION = "1.0"


@dataclass
class ReportBundle:
    command: str
    inputs: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    timing: dict | None = None
    schema_version: str = SCHEMA_VERSION

    def as_dict(self) -> dict:
        out = {"schema_version": self.schema_version, "command": self.command,
               "inputs": self.inputs, "results": self.results, "warnings": self.warnings}
        if self.timing is not None:
            out["timing"] = self.timing
        return out

    def to_json(self) -> str:
        return dumps(self.as_dict())


def _float(x: float) -> str:
    if math.isfinite(x):
        text = format(x, ".17g")
        if not any(c in text for c in ".en"):
            text += ".0"
        return text
    return json.dumps("nan" if math.isnan(x) else ("inf" if x > 0 else "-inf"))


def _emit(obj: Any, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _emit(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [json.dumps(str(k)) + ": " + _emit(v, indent, level + 1) for k, v in obj.items()]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_emit(v, indent, level + 1) for v in obj) + "]"
        return "[" + pad + ("," + pad).join(_emit(v, indent, level + 1) for v in obj) + end + "]"
    if hasattr(obj, "as_dict"):
        return _emit(obj.as_dict(), indent, level)
    return json.dumps(str(obj))


def dumps(obj: Any, indent: int = 2) -> str:
    """JSON text with floats at 17 significant digits; byte-stable for equal input."""
    return _emit(obj, indent, 0) + "\n"
