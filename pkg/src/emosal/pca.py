"""PCA projection baseline for dimensionality reduction of frame vectors.

Fitting runs a singular value decomposition of the centered frame sample;
components are the top right-singular directions with a deterministic sign
(the largest-magnitude entry of each component is positive). Explained
variances use the ddof-1 convention so they match the sample covariance.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_embedding_matrix
from .errors import FormatError
from .utils import derive_seed

PROJECTION_MAGIC = b"PCAP1"
DEFAULT_MAX_FRAMES = 100_000


@dataclass(frozen=True)
class PcaProjection:
    mean: np.ndarray                # (N,)
    components: np.ndarray          # (d, N), orthonormal rows
    explained_variance: np.ndarray  # (d,), nonincreasing

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def source_dims(self) -> int:
        return self.components.shape[1]


def fit_pca(frames, n_components: int) -> PcaProjection:
    """Fit the projection on an (m, N) sample of frame vectors; needs m > d."""
    frames = check_embedding_matrix(frames, name="frame sample")
    m, n_dims = frames.shape
    d = int(n_components)
    if d < 1 or d > n_dims:
        raise ValueError(f"n_components must be in [1, {n_dims}], got {n_components}")
    if m <= d:
        raise ValueError(f"need more than {d} frames to fit {d} components, got {m}")
    mean = frames.mean(axis=0)
    centered = frames - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:d].copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    explained = (s[:d] ** 2) / (m - 1)
    return PcaProjection(mean=mean, components=components, explained_variance=explained)


def apply_pca(seq, proj: PcaProjection) -> np.ndarray:
    """Map each frame to components @ (frame - mean); frame count unchanged."""
    arr = check_embedding_matrix(seq)
    if arr.shape[1] != proj.source_dims:
        raise ValueError(f"sequence has {arr.shape[1]} dims, projection expects {proj.source_dims}")
    return (arr - proj.mean) @ proj.components.T


def subsample_frames(sequences, max_frames: int = DEFAULT_MAX_FRAMES, seed: int = 0) -> np.ndarray:
    """Stack all frames of the given sequences, uniformly subsampled to a cap."""
    stacked = np.concatenate([check_embedding_matrix(s) for s in sequences], axis=0)
    if stacked.shape[0] <= max_frames:
        return stacked
    rng = np.random.default_rng(derive_seed(seed, "pca-subsample"))
    idx = np.sort(rng.choice(stacked.shape[0], size=max_frames, replace=False))
    return stacked[idx]


def write_projection(proj: PcaProjection, dest) -> None:
    """Binary layout: magic, u32 d, u32 N, then mean / components / variances as f64 LE."""
    with open(dest, "wb") as fh:
        fh.write(PROJECTION_MAGIC)
        fh.write(struct.pack("<II", proj.n_components, proj.source_dims))
        fh.write(proj.mean.astype("<f8").tobytes())
        fh.write(proj.components.astype("<f8").tobytes(order="C"))
        fh.write(proj.explained_variance.astype("<f8").tobytes())


def read_projection(src) -> PcaProjection:
    raw = Path(src).read_bytes()
    if raw[:5] != PROJECTION_MAGIC:
        raise FormatError(f"{src}: bad magic {raw[:5]!r}, expected {PROJECTION_MAGIC!r}")
    d, n = struct.unpack("<II", raw[5:13])
    need = 13 + 8 * (n + d * n + d)
    if len(raw) != need:
        raise FormatError(f"{src}: expected {need} bytes for a {d}x{n} projection, got {len(raw)}")
    off = 13
    mean = np.frombuffer(raw, dtype="<f8", count=n, offset=off).copy()
    off += 8 * n
    components = np.frombuffer(raw, dtype="<f8", count=d * n, offset=off).reshape(d, n).copy()
    off += 8 * d * n
    explained = np.frombuffer(raw, dtype="<f8", count=d, offset=off).copy()
    return PcaProjection(mean=mean, components=components, explained_variance=explained)


class PcaReducer(BaseEstimator, TransformerMixin):
    """Transformer projecting frame matrices onto the top principal directions.

    Fit expects an (m, N) matrix of frame vectors (use
    :func:`subsample_frames` to build one from sequences).
    """

    def __init__(self, n_components: int = 2):
        self.n_components = n_components

    def fit(self, X, y=None):
        self.projection_ = fit_pca(X, self.n_components)
        self.n_features_in_ = self.projection_.source_dims
        return self

    def transform(self, X):
        if not hasattr(self, "projection_"):
            raise RuntimeError("PcaReducer is not fitted")
        return apply_pca(X, self.projection_)
