"""JSON encoding with fixed-point floats, for byte-reproducible reports and manifests."""
from __future__ import annotations

import json
import math
from enum import Enum

import numpy as np


def _enc(obj, decimals: int) -> str:
    if isinstance(obj, Enum):
        obj = obj.value
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(bool(obj) if obj is not None else None)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        s = f"{x:.{decimals}f}"
        # avoid "-0.000000"
        return s[1:] if s.startswith("-") and float(s) == 0 else s
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_enc(v, decimals)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_enc(v, decimals) for v in obj) + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def quantize(x, decimals: int = 6) -> float:
    """Round to the grid ``dumps`` writes, so a serialized value replays exactly."""
    return float(round(float(x), decimals))


def dumps(obj, decimals: int = 6) -> str:
    """Like ``json.dumps`` but floats are written with exactly ``decimals`` places.

    Key order follows dict insertion order.
    """
    return _enc(obj, decimals)
