"""Input validation helpers used across estimators and functional ops."""

import numpy as np

from .errors import ArgumentError


def check_gray_image(img, name="image"):
    """Validate a 2-D luminance array with values in [0, 1].

    Returns the input as a float64 C-contiguous array.
    """
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ArgumentError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ArgumentError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ArgumentError(f"{name} contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ArgumentError(
            f"{name} values must lie in [0, 1], got range "
            f"[{arr.min():.6g}, {arr.max():.6g}]"
        )
    return np.ascontiguousarray(arr)


def check_same_shape(a, b, name_a="first", name_b="second"):
    if a.shape != b.shape:
        raise ArgumentError(
            f"{name_a} and {name_b} must have identical dimensions: "
            f"{a.shape} vs {b.shape}"
        )


def check_binary_map(mask, name="contour map"):
    """Validate a {0, 1} mask; returns it as a boolean array."""
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ArgumentError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.dtype != bool:
        vals = np.unique(arr)
        if not np.isin(vals, (0, 1)).all():
            raise ArgumentError(f"{name} must be binary")
        arr = arr.astype(bool)
    return arr


def check_positive(value, name):
    if not np.isfinite(value) or value <= 0:
        raise ArgumentError(f"{name} must be strictly positive, got {value}")
    return float(value)


def check_prob_vector(p, name="distribution", tol=1e-6):
    """Validate a probability vector (nonnegative, sums to 1 within tol)."""
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1:
        raise ArgumentError(f"{name} must be 1-D")
    if arr.min() < 0:
        raise ArgumentError(f"{name} has negative entries")
    total = arr.sum()
    if abs(total - 1.0) > tol:
        raise ArgumentError(f"{name} sums to {total:.9f}, expected 1")
    return arr
