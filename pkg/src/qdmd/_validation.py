"""Input validation helpers shared by the functional core and the estimators."""

import numpy as np

from .exceptions import ShapeError


def as_real_matrix(a, name="array", *, ndim=2):
    """Return ``a`` as a finite float64 array with exactly ``ndim`` dimensions."""
    arr = np.asarray(a)
    if np.iscomplexobj(arr):
        if np.any(np.abs(arr.imag) > 0):
            raise ShapeError(f"{name} must be real-valued")
        arr = arr.real
    arr = np.asarray(arr, dtype=float)
    if arr.ndim != ndim:
        raise ShapeError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ShapeError(f"{name} contains non-finite entries")
    return arr


def as_vector(a, name="vector", size=None):
    arr = as_real_matrix(a, name, ndim=1)
    if size is not None and arr.shape[0] != size:
        raise ShapeError(f"{name} must have length {size}, got {arr.shape[0]}")
    return arr


def as_square(a, name="matrix", size=None, dtype=float):
    arr = np.asarray(a, dtype=dtype)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {arr.shape}")
    if size is not None and arr.shape[0] != size:
        raise ShapeError(f"{name} must be {size}x{size}, got {arr.shape}")
    return arr


def check_same_columns(*pairs):
    """Raise unless every ``(name, array)`` pair has the same column count."""
    counts = {name: arr.shape[1] for name, arr in pairs}
    if len(set(counts.values())) > 1:
        detail = ", ".join(f"{k}={v}" for k, v in counts.items())
        raise ShapeError(f"column counts differ: {detail}")


def frozen(arr):
    """Mark ``arr`` read-only and return it."""
    arr = np.asarray(arr)
    arr.setflags(write=False)
    return arr
