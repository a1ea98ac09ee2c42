"""JSON reports with 17-significant-digit floats and a versioned schema."""

from __future__ import annotations

import json
import math
from datetime import datetime, timezone
from typing import Any

import numpy as np

from .config import SCHEMA_VERSION

TIMESTAMP_FIELD = "created"

_matrix = {"type": "array", "items": {"type": "array", "items": {"type": ["number", "null"]}}}
_vector = {"type": "array", "items": {"type": ["number", "null"]}}
_errors = {
    "type": "object",
    "required": ["max_abs", "frobenius", "abs"],
    "properties": {
        "max_abs": {"type": "number"},
        "frobenius": {"type": "number"},
        "abs": {"oneOf": [_vector, _matrix]},
    },
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "kind", TIMESTAMP_FIELD, "config", "n"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"enum": ["state", "channel", "variance-curves"]},
        TIMESTAMP_FIELD: {"type": "string"},
        "config": {"type": "object"},
        "n": {"type": "integer", "minimum": 1},
        "setting_count": {"type": "integer", "minimum": 1},
        "expected_setting_count": {"type": "integer", "minimum": 1},
        "budget": {
            "type": "object",
            "required": ["shots", "seed"],
            "properties": {"shots": {"type": ["integer", "string"]}, "seed": {"type": "integer"}},
        },
        "true": {"type": "object"},
        "estimate": {"type": "object"},
        "errors": {"type": "object", "additionalProperties": _errors},
        "residuals": {"type": "object", "additionalProperties": {"type": "number"}},
        "diagnostics": {"type": "object"},
        "root_selection": {"type": "array", "items": {"type": "object"}},
        "csv": {"type": "string"},
        "columns": {"type": "array", "items": {"type": "string"}},
        "rows": {"type": "integer", "minimum": 1},
    },
    "allOf": [
        {
            "if": {"properties": {"kind": {"enum": ["state", "channel"]}}},
            "then": {"required": ["setting_count", "expected_setting_count", "budget", "true",
                                  "estimate", "errors", "residuals", "diagnostics"]},
        },
        {
            "if": {"properties": {"kind": {"const": "channel"}}},
            "then": {"required": ["root_selection"]},
        },
        {
            "if": {"properties": {"kind": {"const": "variance-curves"}}},
            "then": {"required": ["csv", "columns", "rows"]},
        },
    ],
}


def timestamp() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def plain(obj: Any) -> Any:
    """Convert numpy containers and scalars into lists, floats and ints."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _scalar(x) -> str:
    if isinstance(x, bool) or x is None:
        return json.dumps(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            return "null"
        return format(x, ".17g")
    if isinstance(x, int):
        return str(x)
    return json.dumps(x, ensure_ascii=False)


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits.

    Non-finite floats become ``null``. Lists of scalars stay on one line.
    """
    obj = plain(obj) if _level == 0 else obj
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_scalar(v) for v in obj) + "]"
        items = [inner + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    return _scalar(obj)


def error_block(est, true) -> dict:
    diff = np.abs(np.asarray(est, dtype=float) - np.asarray(true, dtype=float))
    return {"max_abs": float(diff.max()), "frobenius": float(np.linalg.norm(diff)), "abs": diff}


def without_timestamp(text: str) -> dict:
    doc = json.loads(text)
    doc.pop(TIMESTAMP_FIELD, None)
    return doc
