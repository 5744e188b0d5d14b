"""Input validation helpers shared by the planner modules."""
from __future__ import annotations

import math

import numpy as np


class InvalidInputError(ValueError):
    """Raised when a state, problem or parameter is malformed."""


class ConfigError(ValueError):
    """Raised for invalid planner or campaign configuration."""


def as_state(x, dim: int | None = None, name: str = "state") -> np.ndarray:
    """Return ``x`` as a finite 1-D float64 array, optionally of length ``dim``."""
    try:
        arr = np.asarray(x, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{name} is not numeric: {x!r}") from exc
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be 1-D, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise InvalidInputError(f"{name} has dimension {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite coordinates")
    return arr


def as_points(X, dim: int | None = None, name: str = "points") -> np.ndarray:
    """Return ``X`` as a finite (k, n) float64 array."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-D, got shape {arr.shape}")
    if dim is not None and arr.shape[1] != dim:
        raise InvalidInputError(f"{name} have dimension {arr.shape[1]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contain non-finite coordinates")
    return arr


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not (value > 0 and math.isfinite(value)):
        raise ConfigError(f"{name} must be positive and finite, got {value}")
    return value


def frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr
