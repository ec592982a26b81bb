"""Input validation helpers shared by the estimators and functional API."""

from __future__ import annotations

import numpy as np


def check_embedding_matrix(values, name: str = "embedding") -> np.ndarray:
    """Coerce to a 2-D float64 array with >= 1 row/col and all-finite values."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and column, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise ValueError(f"{name} contains a non-finite value at row {bad[0]}, col {bad[1]}")
    return np.ascontiguousarray(arr)


def check_vector_pair(x, y, min_length: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Coerce two equally-long 1-D float64 vectors; enforce a minimum length."""
    xa = np.asarray(x, dtype=np.float64).ravel()
    ya = np.asarray(y, dtype=np.float64).ravel()
    if xa.shape[0] != ya.shape[0]:
        raise ValueError(f"length mismatch: {xa.shape[0]} vs {ya.shape[0]}")
    if xa.shape[0] < min_length:
        raise ValueError(f"need at least {min_length} samples, got {xa.shape[0]}")
    if not (np.all(np.isfinite(xa)) and np.all(np.isfinite(ya))):
        raise ValueError("inputs contain non-finite values")
    return xa, ya


def check_fraction(fraction: float) -> float:
    f = float(fraction)
    if not (0.0 < f <= 1.0):
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    return f


def check_pooled_labels(pooled, labels, n_label_cols: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Validate an (utterances x dims) pooled matrix against a label matrix."""
    p = check_embedding_matrix(pooled, name="pooled matrix")
    l = np.asarray(labels, dtype=np.float64)
    if l.ndim != 2 or l.shape[1] != n_label_cols:
        raise ValueError(f"labels must have shape (n, {n_label_cols}), got {l.shape}")
    if l.shape[0] != p.shape[0]:
        raise ValueError(f"pooled rows ({p.shape[0]}) and label rows ({l.shape[0]}) differ")
    if p.shape[0] < 2:
        raise ValueError("need at least 2 utterances")
    if not np.all(np.isfinite(l)):
        raise ValueError("labels contain non-finite values")
    return p, l
