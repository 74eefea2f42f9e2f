"""Small input-validation helpers shared by the allocators."""

import numpy as np


class ConfigurationError(ValueError):
    """Raised for invalid platform, limit or curve configurations."""


def check_vector(x, size=None, name="x"):
    """Return ``x`` as a finite 1-D float array, optionally of a given size."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if size is not None and arr.shape[0] != size:
        raise ValueError(f"{name} must have length {size}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_matrix(m, shape=None, name="m"):
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if shape is not None:
        rows, cols = shape
        if (rows is not None and arr.shape[0] != rows) or (cols is not None and arr.shape[1] != cols):
            raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    return arr


def check_positive(value, name, strict=True):
    v = float(value)
    if not np.isfinite(v) or (v <= 0 if strict else v < 0):
        raise ConfigurationError(f"{name} must be {'positive' if strict else 'non-negative'}, got {value}")
    return v


def as_batch(X, width, name="X"):
    """Promote a single row to a batch of shape (n, width)."""
    arr = np.asarray(X, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != width:
        raise ValueError(f"{name} must have {width} columns, got {arr.shape[1]}")
    return arr, single
