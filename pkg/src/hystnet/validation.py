"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np

N_JOINTS = 6


def as_float_array(x, name: str, shape: tuple[int, ...] | None = None) -> np.ndarray:
    """Coerce to a float64 array, checking finiteness and (optionally) shape."""
    arr = np.asarray(x, dtype=float)
    if shape is not None and arr.shape != shape:
        raise ValueError(f"{name}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: contains non-finite values")
    return arr


def as_joint_vector(x, name: str) -> np.ndarray:
    """A finite (6,) float vector."""
    return as_float_array(x, name, shape=(N_JOINTS,))


def check_positive(x: np.ndarray | float, name: str) -> None:
    if np.any(np.asarray(x) <= 0):
        raise ValueError(f"{name}: must be strictly positive")


def check_non_negative(x: np.ndarray | float, name: str) -> None:
    if np.any(np.asarray(x) < 0):
        raise ValueError(f"{name}: must be non-negative")


def check_fitted(estimator, attr: str = "net_") -> None:
    """Raise if a fit-style estimator has not been fitted yet."""
    if not hasattr(estimator, attr):
        raise RuntimeError(
            f"{type(estimator).__name__} is not fitted; call fit() first"
        )
