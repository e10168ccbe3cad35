"""Input validation helpers shared across modules and estimators."""

from __future__ import annotations

import numpy as np

from .exceptions import NonFiniteInputError, ShapeMismatchError


def check_finite(arr: np.ndarray, name: str = "input") -> np.ndarray:
    """Raise NonFiniteInputError if `arr` contains NaN or infinity."""
    if arr.size and not np.all(np.isfinite(arr)):
        raise NonFiniteInputError(f"{name} contains non-finite values")
    return arr


def as_float_array(x, name: str = "input", ndim: int | None = None) -> np.ndarray:
    """Coerce to a float64 ndarray, optionally enforcing dimensionality."""
    arr = np.asarray(x, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise ShapeMismatchError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "inputs") -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"{what} have different shapes: {a.shape} vs {b.shape}")


def check_positive(value, name: str) -> None:
    if value <= 0:
        raise ValueError(f"{name} must be positive, got {value}")
