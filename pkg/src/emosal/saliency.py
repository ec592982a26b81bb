"""Per-dimension saliency scores and dimension selection.

The score of dimension k against one label is its absolute correlation with
that label plus a redundancy term: the average over the other dimensions of
their dependence on k, each weighted by that dimension's own label relevance.
Dependence is the absolute Pearson correlation (method ``CCS``) or a plug-in
mutual information with equal-frequency binning (method ``MIS``). Scores per
label are averaged into the aggregated score used for ranking.

Degenerate (constant) dimensions contribute correlation 0 everywhere rather
than NaN: a constant carries no label information and must not poison the
redundancy sums.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_embedding_matrix, check_fraction, check_pooled_labels, \
    check_vector_pair
from .utils import round_half_up

METHODS = ("CCS", "MIS")
MASK_METHODS = ("CCS", "MIS", "PCA", "manual")
DEFAULT_MI_BINS = 16


def abs_correlation(x, y) -> float:
    """Absolute Pearson correlation (population moments); 0 if either input is constant."""
    x, y = check_vector_pair(x, y)
    dx = x - x.mean()
    dy = y - y.mean()
    vx = float(dx @ dx)
    vy = float(dy @ dy)
    if vx == 0.0 or vy == 0.0:
        return 0.0
    return abs(float(dx @ dy)) / np.sqrt(vx * vy)


def quantile_bin_assignments(x, bins: int) -> np.ndarray:
    """Equal-frequency bin index per sample; ties broken by stable index order.

    Sample i's bin is ``rank_i * bins // n`` where ranks come from a stable
    sort, so bin populations differ by at most one and any strictly monotone
    transform of x yields identical assignments.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    n = x.shape[0]
    if bins < 1:
        raise ValueError("bins must be positive")
    if n < bins:
        raise ValueError(f"need at least {bins} samples for {bins} bins, got {n}")
    order = np.argsort(x, kind="stable")
    ranks = np.empty(n, dtype=np.intp)
    ranks[order] = np.arange(n)
    return (ranks * bins) // n


def _mi_from_assignments(bx: np.ndarray, by: np.ndarray, bins: int) -> float:
    joint = np.zeros((bins, bins), dtype=np.float64)
    np.add.at(joint, (bx, by), 1.0)
    n = bx.shape[0]
    p = joint / n
    px = p.sum(axis=1)
    py = p.sum(axis=0)
    nz = p > 0
    outer = np.outer(px, py)
    return float(np.sum(p[nz] * np.log(p[nz] / outer[nz])))


def mutual_information(x, y, bins: int = DEFAULT_MI_BINS) -> float:
    """Plug-in mutual information in nats from a 2-D equal-frequency histogram."""
    x, y = check_vector_pair(x, y, min_length=max(2, bins))
    return _mi_from_assignments(
        quantile_bin_assignments(x, bins), quantile_bin_assignments(y, bins), bins
    )


def _dependence_matrix(pooled: np.ndarray, method: str, bins: int) -> np.ndarray:
    """Pairwise dependence of pooled dimensions; |corr| for CCS, MI for MIS."""
    n, n_dims = pooled.shape
    if method == "CCS":
        centered = pooled - pooled.mean(axis=0)
        norms = np.sqrt(np.einsum("ij,ij->j", centered, centered))
        dep = np.abs(centered.T @ centered)
        with np.errstate(invalid="ignore", divide="ignore"):
            dep /= np.outer(norms, norms)
        dep[~np.isfinite(dep)] = 0.0  # zero-variance dimensions
        return dep
    assignments = np.stack([quantile_bin_assignments(pooled[:, k], bins) for k in range(n_dims)])
    dep = np.zeros((n_dims, n_dims))
    for k in range(n_dims):
        for j in range(k, n_dims):
            dep[k, j] = dep[j, k] = _mi_from_assignments(assignments[k], assignments[j], bins)
    return dep


def _relevance_matrix(pooled: np.ndarray, labels: np.ndarray, method: str, bins: int) -> np.ndarray:
    """Dependence of each dimension on each of the three mean labels, (N, 3)."""
    n_dims = pooled.shape[1]
    rel = np.zeros((n_dims, labels.shape[1]))
    if method == "CCS":
        for li in range(labels.shape[1]):
            for k in range(n_dims):
                rel[k, li] = abs_correlation(pooled[:, k], labels[:, li])
        return rel
    label_bins = [quantile_bin_assignments(labels[:, li], bins) for li in range(labels.shape[1])]
    dim_bins = [quantile_bin_assignments(pooled[:, k], bins) for k in range(n_dims)]
    for li in range(labels.shape[1]):
        for k in range(n_dims):
            rel[k, li] = _mi_from_assignments(dim_bins[k], label_bins[li], bins)
    return rel


def gamma(k: int, pooled, relevance, method: str = "CCS", bins: int = DEFAULT_MI_BINS) -> float:
    """Redundancy of dimension k: mean over j != k of relevance[j] * dep(k, j).

    ``relevance[j]`` must be dimension j's precomputed dependence on the label
    under the same method (|correlation| for CCS, mutual information for MIS).
    """
    pooled = check_embedding_matrix(pooled, name="pooled matrix")
    relevance = np.asarray(relevance, dtype=np.float64).ravel()
    n_dims = pooled.shape[1]
    if n_dims < 2:
        raise ValueError("redundancy needs at least 2 dimensions")
    if relevance.shape[0] != n_dims:
        raise ValueError(f"relevance has {relevance.shape[0]} entries for {n_dims} dimensions")
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    total = 0.0
    for j in range(n_dims):
        if j == k:
            continue
        if method == "CCS":
            dep = abs_correlation(pooled[:, k], pooled[:, j])
        else:
            dep = mutual_information(pooled[:, k], pooled[:, j], bins)
        total += relevance[j] * dep
    return total / (n_dims - 1)


@dataclass(frozen=True)
class SaliencyScores:
    """Per-dimension scores: per_label = base_term + gamma_term, column per label."""

    method: str
    per_label: np.ndarray   # (N, 3)
    aggregated: np.ndarray  # (N,)
    base_term: np.ndarray   # (N, 3)
    gamma_term: np.ndarray  # (N, 3)

    @property
    def n_dims(self) -> int:
        return self.per_label.shape[0]


def score_saliency(pooled, label_means, method: str = "CCS",
                   bins: int = DEFAULT_MI_BINS) -> SaliencyScores:
    """Score every dimension against the three mean labels.

    ``pooled`` is the (utterances x dims) mean-pooled training matrix and
    ``label_means`` its aligned (utterances x 3) mean-label matrix; callers
    are responsible for passing the training split only.
    """
    method = str(method).upper()
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    pooled, labels = check_pooled_labels(pooled, label_means)
    n_dims = pooled.shape[1]
    base = _relevance_matrix(pooled, labels, method, bins)
    dep = _dependence_matrix(pooled, method, bins)
    np.fill_diagonal(dep, 0.0)
    if n_dims >= 2:
        gamma_term = (dep @ base) / (n_dims - 1)
    else:
        gamma_term = np.zeros_like(base)
    per_label = base + gamma_term
    aggregated = per_label.mean(axis=1)
    return SaliencyScores(method, per_label, aggregated, base, gamma_term)


@dataclass(frozen=True)
class SelectionMask:
    """Retained dimension indices (ascending) with their provenance."""

    kept: tuple[int, ...]
    source_dims: int
    method: str
    fraction: float

    def __post_init__(self):
        if self.method not in MASK_METHODS:
            raise ValueError(f"method must be one of {MASK_METHODS}, got {self.method!r}")
        kept = tuple(int(k) for k in self.kept)
        if list(kept) != sorted(set(kept)):
            raise ValueError("kept indices must be unique and ascending")
        if kept and not (0 <= kept[0] and kept[-1] < self.source_dims):
            raise ValueError(f"kept indices out of range [0, {self.source_dims})")
        if not kept:
            raise ValueError("selection kept no dimensions")
        object.__setattr__(self, "kept", kept)


def ranking_order(aggregated: np.ndarray) -> np.ndarray:
    """Dimensions ordered by descending aggregated score, ties to the lower index."""
    aggregated = np.asarray(aggregated, dtype=np.float64).ravel()
    return np.lexsort((np.arange(aggregated.shape[0]), -aggregated))


def select_top_fraction(aggregated, fraction: float, method: str) -> SelectionMask:
    """Keep the round(fraction * N) best-scoring dimensions (round half up)."""
    fraction = check_fraction(fraction)
    aggregated = np.asarray(aggregated, dtype=np.float64).ravel()
    n_dims = aggregated.shape[0]
    n_keep = round_half_up(fraction * n_dims)
    if n_keep < 1:
        raise ValueError(f"fraction {fraction} keeps no dimensions out of {n_dims}")
    order = ranking_order(aggregated)
    kept = tuple(sorted(int(k) for k in order[:n_keep]))
    return SelectionMask(kept=kept, source_dims=n_dims, method=method, fraction=fraction)


def rank_and_select(scores: SaliencyScores, fraction: float) -> SelectionMask:
    return select_top_fraction(scores.aggregated, fraction, scores.method)


def apply_mask(seq, mask: SelectionMask) -> np.ndarray:
    """Column-select a frame matrix; frame count is unchanged."""
    arr = check_embedding_matrix(seq)
    if arr.shape[1] != mask.source_dims:
        raise ValueError(f"sequence has {arr.shape[1]} dims, mask expects {mask.source_dims}")
    return arr[:, list(mask.kept)]


def write_selection_mask(mask: SelectionMask, dest) -> None:
    text = (f"dims={mask.source_dims} method={mask.method} fraction={mask.fraction!r}\n"
            + " ".join(str(k) for k in mask.kept) + "\n")
    Path(dest).write_text(text, encoding="utf-8")


def read_selection_mask(src) -> SelectionMask:
    lines = Path(src).read_text(encoding="utf-8").splitlines()
    if len(lines) < 2:
        raise ValueError(f"mask file {src} must have a header and an index line")
    fields = dict(token.split("=", 1) for token in lines[0].split())
    kept = tuple(int(tok) for tok in lines[1].split())
    return SelectionMask(
        kept=kept,
        source_dims=int(fields["dims"]),
        method=fields["method"],
        fraction=float(fields["fraction"]),
    )


REPORT_HEADER = ("dim", "S_val", "S_act", "S_dom", "mu", "rank", "kept")


def write_saliency_report(scores: SaliencyScores, mask: SelectionMask | None, dest) -> None:
    """CSV with one row per dimension, ordered by dimension index.

    ``rank`` is the 1-based position in the saliency ordering; ``kept`` marks
    mask membership (all 1 when no mask is given). Scores print with 9
    significant digits.
    """
    order = ranking_order(scores.aggregated)
    rank = np.empty(scores.n_dims, dtype=int)
    rank[order] = np.arange(1, scores.n_dims + 1)
    kept = set(mask.kept) if mask is not None else set(range(scores.n_dims))
    with open(dest, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_HEADER)
        for k in range(scores.n_dims):
            row = [k]
            row += [format(scores.per_label[k, c], ".9g") for c in range(3)]
            row += [format(scores.aggregated[k], ".9g"), int(rank[k]), int(k in kept)]
            writer.writerow(row)


def read_saliency_report(src) -> dict[str, np.ndarray]:
    with open(src, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != REPORT_HEADER:
            raise ValueError(f"unexpected report header {header}")
        rows = [row for row in reader if row]
    rows.sort(key=lambda row: int(row[0]))
    return {
        "dim": np.array([int(r[0]) for r in rows]),
        "per_label": np.array([[float(r[1]), float(r[2]), float(r[3])] for r in rows]),
        "aggregated": np.array([float(r[4]) for r in rows]),
        "rank": np.array([int(r[5]) for r in rows]),
        "kept": np.array([bool(int(r[6])) for r in rows]),
    }


class SaliencySelector(BaseEstimator, TransformerMixin):
    """Feature selector keeping the most label-salient embedding dimensions.

    Fit on the mean-pooled training matrix X (n_utterances, n_dims) and the
    mean labels y (n_utterances, 3); transform selects columns from any
    matrix with matching width, including raw frame sequences.

    Parameters
    ----------
    method : {"CCS", "MIS"}
        Dependence measure: absolute correlation or mutual information.
    fraction : float in (0, 1]
        Share of dimensions to keep (round half up).
    bins : int
        Histogram bins per variable for the MIS estimator.
    """

    def __init__(self, method: str = "CCS", fraction: float = 1.0, bins: int = DEFAULT_MI_BINS):
        self.method = method
        self.fraction = fraction
        self.bins = bins

    def fit(self, X, y):
        self.scores_ = score_saliency(X, y, method=self.method, bins=self.bins)
        self.mask_ = rank_and_select(self.scores_, self.fraction)
        self.n_features_in_ = self.scores_.n_dims
        return self

    def transform(self, X):
        if not hasattr(self, "mask_"):
            raise RuntimeError("SaliencySelector is not fitted")
        return apply_mask(X, self.mask_)

    def get_support(self) -> np.ndarray:
        if not hasattr(self, "mask_"):
            raise RuntimeError("SaliencySelector is not fitted")
        support = np.zeros(self.n_features_in_, dtype=bool)
        support[list(self.mask_.kept)] = True
        return support
