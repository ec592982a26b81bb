"""Concordance correlation coefficient, the combined loss, and summaries.

All moments are population moments (divide by n). The concordance value is

    ccc = 2*rho*sd_x*sd_y / (var_x + var_y + (mean_x - mean_y)^2)

If exactly one input is constant the correlation is undefined and the value
is taken to be 0 so that losses stay finite; two constant inputs raise.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._validation import check_vector_pair
from .errors import DegenerateInputError

DIMENSION_NAMES = ("valence", "activation", "dominance")


@dataclass(frozen=True)
class LossWeights:
    """Weights (alpha, beta, 1 - alpha - beta) over valence/activation/dominance."""

    alpha: float = 1.0 / 3.0
    beta: float = 1.0 / 3.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.alpha + self.beta > 1.0 + 1e-12:
            raise ValueError(f"need alpha, beta >= 0 and alpha + beta <= 1, "
                             f"got ({self.alpha}, {self.beta})")

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, 1.0 - self.alpha - self.beta])


@dataclass(frozen=True)
class CccBreakdown:
    value: float
    pearson: float
    mean_x: float
    mean_y: float
    var_x: float
    var_y: float


def _moments(x: np.ndarray, y: np.ndarray):
    mx, my = x.mean(), y.mean()
    dx, dy = x - mx, y - my
    n = x.shape[0]
    return mx, my, float(dx @ dx) / n, float(dy @ dy) / n, float(dx @ dy) / n


def ccc(x, y) -> CccBreakdown:
    """Concordance between two vectors, with the moments it was built from."""
    x, y = check_vector_pair(x, y)
    mx, my, vx, vy, cov = _moments(x, y)
    if vx == 0.0 and vy == 0.0:
        raise DegenerateInputError("both inputs are constant; concordance is undefined")
    if vx == 0.0 or vy == 0.0:
        return CccBreakdown(0.0, 0.0, mx, my, vx, vy)
    rho = cov / np.sqrt(vx * vy)
    value = 2.0 * cov / (vx + vy + (mx - my) ** 2)
    return CccBreakdown(float(value), float(rho), mx, my, vx, vy)


def ccc_value_and_grad(pred, target) -> tuple[float, np.ndarray]:
    """Concordance of pred against target and its exact gradient w.r.t. pred.

    The gradient accounts for pred's mean and variance being batch statistics:
    with D the denominator of the concordance ratio,

        d ccc / d pred_i = (2 / (n * D)) * [(y_i - mean_y) - ccc * (pred_i - mean_y)]

    A single constant input follows the value policy (ccc 0, zero gradient).
    """
    x, y = check_vector_pair(pred, target)
    n = x.shape[0]
    mx, my, vx, vy, cov = _moments(x, y)
    denom = vx + vy + (mx - my) ** 2
    if vx == 0.0 and vy == 0.0:
        raise DegenerateInputError("both inputs are constant; concordance is undefined")
    if vx == 0.0 or vy == 0.0:
        return 0.0, np.zeros_like(x)
    value = 2.0 * cov / denom
    grad = (2.0 / (n * denom)) * ((y - my) - value * (x - my))
    return float(value), grad


def _weighted_ccc_loss(pred: np.ndarray, target: np.ndarray, coeffs: np.ndarray,
                       want_grad: bool):
    """Negative weighted sum of row-wise batch concordances, optional gradient.

    Rows where both pred and target are constant contribute 0 (policy), but if
    every row is degenerate the loss itself is undefined and raises.
    """
    if pred.shape != target.shape:
        raise ValueError(f"pred shape {pred.shape} != target shape {target.shape}")
    if pred.ndim != 2 or pred.shape[0] != coeffs.shape[0]:
        raise ValueError(f"expected {coeffs.shape[0]} rows, got shape {pred.shape}")
    if pred.shape[1] < 2:
        raise ValueError("batch must contain at least 2 samples")
    loss = 0.0
    grad = np.zeros_like(pred) if want_grad else None
    degenerate = 0
    for d in range(pred.shape[0]):
        try:
            value, g = ccc_value_and_grad(pred[d], target[d])
        except DegenerateInputError:
            degenerate += 1
            continue
        loss -= coeffs[d] * value
        if want_grad:
            grad[d] = -coeffs[d] * g
    if degenerate == pred.shape[0]:
        raise DegenerateInputError("every output dimension is degenerate in this batch")
    return (loss, grad) if want_grad else loss


def ccc_loss(pred, target, weights: LossWeights = LossWeights()) -> float:
    """Loss -(a*ccc_v + b*ccc_a + (1-a-b)*ccc_d) over a (3, batch) prediction."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    return _weighted_ccc_loss(pred, target, weights.as_array(), want_grad=False)


def ccc_loss_grad(pred, target, weights: LossWeights = LossWeights()):
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    return _weighted_ccc_loss(pred, target, weights.as_array(), want_grad=True)


def ccc_loss_with_variance(pred, target, weights: LossWeights = LossWeights()) -> float:
    """Mean of the concordance loss over mean targets and over variance targets.

    Rows are ordered (mean_v, mean_a, mean_d, var_v, var_a, var_d); the value
    equals 0.5 * loss(means) + 0.5 * loss(variances).
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    coeffs = np.concatenate([weights.as_array(), weights.as_array()]) * 0.5
    return _weighted_ccc_loss(pred, target, coeffs, want_grad=False)


def ccc_loss_with_variance_grad(pred, target, weights: LossWeights = LossWeights()):
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    coeffs = np.concatenate([weights.as_array(), weights.as_array()]) * 0.5
    return _weighted_ccc_loss(pred, target, coeffs, want_grad=True)


LIKERT_RANGE = (1.0, 7.0)
DEFAULT_BIN_EDGES = tuple(np.arange(0.5, 8.0, 1.0))  # unit bins centred on 1..7


@dataclass(frozen=True)
class BinnedMse:
    """Per-bin sample counts and MSE; empty bins carry count 0 and MSE NaN."""

    edges: tuple[float, ...]
    counts: tuple[int, ...]
    mse: tuple[float, ...]

    @property
    def n_bins(self) -> int:
        return len(self.counts)


def mse_by_bin(pred, target, edges=None) -> BinnedMse:
    """Squared error grouped by the target's Likert bin.

    Bins are left-closed; the final bin also includes its right edge. Edges
    must be strictly increasing and cover [1, 7].
    """
    pred, target = check_vector_pair(pred, target, min_length=1)
    edges = np.asarray(DEFAULT_BIN_EDGES if edges is None else edges, dtype=np.float64)
    if edges.ndim != 1 or edges.shape[0] < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("edges must be a strictly increasing vector of length >= 2")
    if edges[0] > LIKERT_RANGE[0] or edges[-1] < LIKERT_RANGE[1]:
        raise ValueError(f"edges must cover [{LIKERT_RANGE[0]:g}, {LIKERT_RANGE[1]:g}]")
    n_bins = edges.shape[0] - 1
    idx = np.searchsorted(edges, target, side="right") - 1
    idx[target == edges[-1]] = n_bins - 1
    se = (pred - target) ** 2
    counts, mses = [], []
    for b in range(n_bins):
        mask = idx == b
        c = int(mask.sum())
        counts.append(c)
        mses.append(float(se[mask].mean()) if c else float("nan"))
    return BinnedMse(tuple(float(e) for e in edges), tuple(counts), tuple(mses))


def write_evaluation_csv(path, split: str, per_dim_ccc, per_dim_bins) -> None:
    """Long-format summary: one row per (dimension, bin), ccc repeated per row.

    ``per_dim_ccc`` maps dimension name -> CccBreakdown (or float);
    ``per_dim_bins`` maps dimension name -> BinnedMse. Empty bins write NA.
    """
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["split", "dimension", "ccc", "bin_index", "bin_count", "bin_mse"])
        for dim in DIMENSION_NAMES:
            value = per_dim_ccc[dim]
            value = value.value if isinstance(value, CccBreakdown) else float(value)
            bins = per_dim_bins[dim]
            for b in range(bins.n_bins):
                mse = bins.mse[b]
                writer.writerow([
                    split, dim, repr(value), b, bins.counts[b],
                    "NA" if np.isnan(mse) else repr(mse),
                ])
