"""Input validation helpers.

Small check functions shared by the functional core and the sklearn-style
estimators. They normalize inputs to float ndarrays and raise
:class:`~paretograph.errors.ValidationError` with a readable message on
malformed input.
"""

from __future__ import annotations

import numpy as np

from .errors import AsymmetryError, ValidationError

__all__ = [
    "check_data_matrix",
    "check_square_matrix",
    "check_symmetric",
    "check_vector",
    "check_node",
    "check_probability",
]


def check_data_matrix(x, name="data", min_rows=1, min_cols=2):
    """Coerce to a 2-D float array with finite entries."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2-dimensional, got ndim={arr.ndim}")
    n, d = arr.shape
    if n < min_rows:
        raise ValidationError(f"{name} needs at least {min_rows} rows, got {n}")
    if d < min_cols:
        raise ValidationError(f"{name} needs at least {min_cols} columns, got {d}")
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise ValidationError(
            f"{name} contains a non-finite entry at row {bad[0] + 1}, column {bad[1] + 1}"
        )
    return arr


def check_square_matrix(x, name="matrix"):
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def check_symmetric(x, name="matrix", rtol=1e-12):
    """Validate symmetry within a relative tolerance; returns the array unchanged."""
    arr = check_square_matrix(x, name=name)
    scale = max(1.0, float(np.max(np.abs(arr))))
    if np.max(np.abs(arr - arr.T)) > rtol * scale:
        raise AsymmetryError(f"{name} is not symmetric within relative tolerance {rtol}")
    return arr


def check_vector(x, d=None, name="vector"):
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be 1-dimensional, got ndim={arr.ndim}")
    if d is not None and arr.shape[0] != d:
        raise ValidationError(f"{name} must have length {d}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def check_node(i, d, name="node"):
    """Validate a 1-based node label against dimension ``d``."""
    ii = int(i)
    if ii != i or not 1 <= ii <= d:
        raise ValidationError(f"{name} must be an integer in 1..{d}, got {i!r}")
    return ii


def check_probability(q, name="q", open_left=True, open_right=True):
    qq = float(q)
    lo_ok = qq > 0 if open_left else qq >= 0
    hi_ok = qq < 1 if open_right else qq <= 1
    if not (lo_ok and hi_ok):
        raise ValidationError(f"{name} must lie in the unit interval, got {q!r}")
    return qq
