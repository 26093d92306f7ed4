"""
Validation utilities for numeric preconditions.

Each helper raises :class:`~app.core.exceptions.ValidationError` with a
message naming the offending argument, so services can state their
preconditions in one line.
"""

import math
from typing import Any, Tuple

import numpy as np

from app.core.exceptions import ValidationError


def validate_positive(name: str, value: float) -> float:
    """
    Require ``value`` to be finite and strictly positive.

    Example:
        ```python
        >>> validate_positive("radius", 52.5)
        52.5
        ```
    """
    if not math.isfinite(value) or value <= 0:
        raise ValidationError(f"{name} must be positive, got {value!r}")
    return value


def validate_non_negative(name: str, value: float) -> float:
    """Require ``value`` to be finite and >= 0."""
    if not math.isfinite(value) or value < 0:
        raise ValidationError(f"{name} must be non-negative, got {value!r}")
    return value


def validate_finite(name: str, *values: float) -> None:
    """Require every value to be finite."""
    for value in values:
        if not math.isfinite(value):
            raise ValidationError(f"{name} must be finite, got {value!r}")


def validate_unit_interval(name: str, value: float) -> float:
    """Require ``0 <= value < 1``."""
    if not (0.0 <= value < 1.0):
        raise ValidationError(f"{name} must lie in [0, 1), got {value!r}")
    return value


def validate_range(name: str, bounds: Tuple[float, float]) -> Tuple[float, float]:
    """Require a finite ``(low, high)`` pair with ``low < high``."""
    low, high = bounds
    validate_finite(name, low, high)
    if not low < high:
        raise ValidationError(f"{name} must satisfy low < high, got {bounds!r}")
    return float(low), float(high)


def validate_frame(frame: Any) -> np.ndarray:
    """
    Check the tactile frame invariants: a 2D array of finite values in [0, 1].

    Returns:
        The frame as a numpy array
    """
    array = np.asarray(frame)
    if array.ndim != 2:
        raise ValidationError(f"frame must be 2D, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValidationError("frame contains non-finite values")
    if array.size and (array.min() < 0.0 or array.max() > 1.0):
        raise ValidationError("frame values must lie in [0, 1]")
    return array
