"""Shared utility functions: table lookups, finiteness guards, digests."""

import hashlib
import json
import math
from typing import Any, Dict, Mapping, Sequence, Tuple

import numpy as np

from smartpack.core.exceptions import InvalidInputError

# Fixed-width float formatting for every CSV the twin writes
FLOAT_FORMAT = "%.9g"


def require_finite(**values: float) -> None:
    """Raise InvalidInputError naming the first non-finite argument."""
    for name, value in values.items():
        if value is None or not math.isfinite(value):
            raise InvalidInputError(f"{name} must be finite", detail=f"got {value!r}")


def require_non_negative(**values: float) -> None:
    require_finite(**values)
    for name, value in values.items():
        if value < 0:
            raise InvalidInputError(f"{name} must be >= 0", detail=f"got {value!r}")


def interp_table(knots: Sequence[Tuple[float, float]], x: float) -> Tuple[float, bool]:
    """Piecewise-linear lookup clamped at the end knots.

    Returns (value, extrapolated) where extrapolated is True when x fell outside the
    knot range and the end value was used.
    """
    xs = np.fromiter((k[0] for k in knots), dtype=float)
    ys = np.fromiter((k[1] for k in knots), dtype=float)
    extrapolated = bool(x < xs[0] or x > xs[-1])
    return float(np.interp(x, xs, ys)), extrapolated


def format_number(value: float) -> str:
    return FLOAT_FORMAT % value


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)


def config_digest(payload: Any) -> str:
    """SHA-256 of the canonical JSON form; stable across runs and platforms."""
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def deep_merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    """Recursively overlay override onto base. Lists and scalars replace wholesale."""
    merged: Dict[str, Any] = dict(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged
