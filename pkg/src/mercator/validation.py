"""Input validation helpers used by the estimators and combiners."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError


def check_matrix(X, name: str = "X", min_rows: int = 1) -> np.ndarray:
    """Coerce to a finite 2-D float array with at least ``min_rows`` rows."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {X.shape}")
    if X.shape[0] < min_rows:
        raise ValueError(f"{name} needs at least {min_rows} rows, got {X.shape[0]}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite entries")
    return X


def check_vector(v, dim: int | None = None, name: str = "v") -> np.ndarray:
    v = np.asarray(v, dtype=float).ravel()
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"{name} has length {v.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def check_binary_labels(y, n: int | None = None) -> np.ndarray:
    """Coerce labels to a 0/1 int array and require both classes present."""
    y = np.asarray(y)
    if y.dtype.kind == "b":
        y = y.astype(int)
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be binary (0 = No, 1 = Yes)")
    y = y.astype(int).ravel()
    if n is not None and y.shape[0] != n:
        raise ValueError(f"got {y.shape[0]} labels for {n} rows")
    if len(np.unique(y)) < 2:
        raise ValueError("both classes must be present")
    return y


def check_probability(p: float, name: str = "probability") -> float:
    p = float(p)
    if not np.isfinite(p) or not 0.0 <= p <= 1.0:
        raise ConfigError(f"{name} must lie in [0, 1], got {p!r}")
    return p


def check_unit_interval(x: float, name: str, *, open_left: bool = False) -> float:
    x = float(x)
    lo_ok = x > 0.0 if open_left else x >= 0.0
    if not np.isfinite(x) or not (lo_ok and x <= 1.0):
        left = "(" if open_left else "["
        raise ConfigError(f"{name} must lie in {left}0, 1], got {x!r}")
    return x
