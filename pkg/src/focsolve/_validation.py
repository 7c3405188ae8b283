"""Small input-checking helpers shared by the public entry points."""

from __future__ import annotations

import numbers

import numpy as np


def check_even_resolution(n) -> int:
    if isinstance(n, bool) or not isinstance(n, numbers.Integral):
        raise TypeError(f"n must be an integer, got {type(n).__name__}")
    n = int(n)
    if n < 2 or n % 2:
        raise ValueError(f"n must be even and >= 2, got {n}")
    return n


def check_positive(value, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be a finite positive number, got {value!r}")
    return value


def check_vector(values, length: int, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != length:
        raise ValueError(f"{name} must have length {length}, got shape {arr.shape}")
    return arr


def check_times(t, t_f: float) -> np.ndarray:
    """Return ``t`` as a float array, rejecting points outside ``[0, t_f]``."""
    arr = np.asarray(t, dtype=float)
    # Allow round-off at the right end, e.g. t_f recomputed as n * h.
    slack = 4.0 * np.finfo(float).eps * max(1.0, t_f)
    if arr.size and (np.any(~np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > t_f + slack):
        raise ValueError(f"time values must lie in [0, {t_f}]")
    return np.minimum(arr, t_f)


def check_finite(values, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        bad = np.flatnonzero(~np.isfinite(arr.reshape(-1)))
        raise FloatingPointError(f"non-finite {what} at index {int(bad[0])}")
    return arr
