"""JSON ingestion and deterministic emission."""

from __future__ import annotations

import json
import math
import os
from typing import Any, Optional

from .errors import InvalidParams
from .model import ModelParams
from .policies import InspectionPolicy, policy_from_dict


def load_json_arg(value: str) -> Any:
    """Parse ``value`` as inline JSON if it looks like JSON, else read it as a path."""
    text = value.strip()
    if text[:1] in "{[\"" or text in ("null", "none"):
        if text == "none":
            return None
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidParams(f"invalid inline JSON: {exc}") from None
    if not os.path.exists(value):
        raise InvalidParams(f"no such file: {value}")
    with open(value) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidParams(f"{value}: invalid JSON: {exc}") from None


def params_from_json(obj) -> ModelParams:
    if isinstance(obj, dict) and "params" in obj and isinstance(obj["params"], dict):
        obj = obj["params"]
    return ModelParams.from_dict(obj)


def policy_from_json(obj) -> Optional[InspectionPolicy]:
    if obj is None or obj == "none":
        return None
    return policy_from_dict(obj)


def _clean(obj):
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return _clean(obj.item())
    return obj


def dumps(obj) -> str:
    """Stable JSON text: fixed key order from the producer, shortest float repr."""
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        import sys
        sys.stdout.write(text)
