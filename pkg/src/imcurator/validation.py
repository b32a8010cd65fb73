"""Small input-validation helpers used across module boundaries."""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .errors import RejectionError, ValidationError


def as_distance_array(values: Iterable[float], name: str = "distances") -> np.ndarray:
    """Coerce to a 1-D float array of finite, non-negative distances."""
    arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values,
                     dtype=float)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} must be finite")
    if arr.size and arr.min() < 0:
        raise ValidationError(f"{name} must be non-negative")
    return arr


def as_bool_array(values: Iterable, name: str = "labels") -> np.ndarray:
    """Coerce to a 1-D boolean array; accepts bools or 0/1 integers."""
    arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    if arr.dtype != bool:
        uniq = set(np.unique(arr).tolist())
        if not uniq <= {0, 1}:
            raise ValidationError(f"{name} must be boolean or 0/1, got values {sorted(uniq)}")
        arr = arr.astype(bool)
    return arr


def check_binary_label(y, name: str = "y") -> int:
    """Validate a scalar similarity label, returning it as 0 or 1."""
    if isinstance(y, bool):
        return int(y)
    if y not in (0, 1):
        raise ValidationError(f"{name} must be 0 or 1, got {y!r}")
    return int(y)


def check_finite_nonnegative(value: float, name: str) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0:
        raise ValidationError(f"{name} must be finite and non-negative, got {value!r}")
    return value


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise ValidationError(f"{name} must be positive, got {value!r}")
    return value


def clamp_bbox(bbox: Sequence[float], width: int, height: int) -> tuple[int, int, int, int]:
    """Clamp a detector box to image bounds; reject zero-area results.

    Detector backends routinely emit slightly out-of-frame boxes, so
    out-of-bounds coordinates are clamped rather than rejected.
    """
    if len(bbox) != 4:
        raise RejectionError(f"bbox must have 4 coordinates, got {len(bbox)}")
    x0, y0, x1, y1 = (float(v) for v in bbox)
    if not (x0 < x1 and y0 < y1):
        raise RejectionError(f"bbox must be well-ordered (min < max per axis), got {bbox}")
    x0 = min(max(x0, 0.0), float(width))
    x1 = min(max(x1, 0.0), float(width))
    y0 = min(max(y0, 0.0), float(height))
    y1 = min(max(y1, 0.0), float(height))
    out = (int(round(x0)), int(round(y0)), int(round(x1)), int(round(y1)))
    if out[0] >= out[2] or out[1] >= out[3]:
        raise RejectionError(f"bbox {bbox} has zero area after clamping to {width}x{height}")
    return out
