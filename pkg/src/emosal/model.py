"""Time-convolutional GRU regressor with exact analytic gradients.

Pipeline per utterance (frames x dims input):

    1-D temporal convolution (kernel 3, same-length zero padding, tanh)
    -> stacked GRU layers -> mean pooling over time
    -> linear + tanh embedding -> linear heads (identity)

The GRU uses separate input and recurrent biases; gates are packed row-wise
in the order (reset, update, candidate):

    r_t = sigmoid(W_ir x_t + b_ir + W_hr h + b_hr)
    z_t = sigmoid(W_iz x_t + b_iz + W_hz h + b_hz)
    n_t = tanh(W_in x_t + b_in + r_t * (W_hn h + b_hn))
    h_t = (1 - z_t) * n_t + z_t * h_{t-1}

Everything is float64 numpy; the backward pass is a hand-derived BPTT whose
correctness is pinned by finite-difference tests. Training is plain SGD with
a seeded per-epoch shuffle, so trajectories are bit-reproducible.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_embedding_matrix
from .errors import FormatError, TrainingDiverged
from .metrics import (
    BinnedMse,
    CccBreakdown,
    DIMENSION_NAMES,
    LossWeights,
    ccc,
    ccc_loss_grad,
    ccc_loss_with_variance_grad,
    mse_by_bin,
)
from .utils import derive_seed

CHECKPOINT_MAGIC = b"TCGRU1\n"


def _sigmoid(x):
    # 0.5 * (1 + tanh(x / 2)) is an overflow-free sigmoid
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass(frozen=True)
class ModelConfig:
    """Architecture sizes. Defaults follow the full-scale recipe; use
    :meth:`desk_scale` for the small configuration used in tests."""

    input_dim: int
    conv_channels: int = 128
    gru_units: int = 256
    embedding_dim: int = 128
    heads: int = 3
    conv_kernel: int = 3
    gru_layers: int = 2
    seed: int = 0

    def __post_init__(self):
        for name in ("input_dim", "conv_channels", "gru_units", "embedding_dim", "gru_layers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.heads not in (3, 6):
            raise ValueError(f"heads must be 3 or 6, got {self.heads}")
        if self.conv_kernel < 1 or self.conv_kernel % 2 == 0:
            raise ValueError("conv_kernel must be odd and positive")

    @classmethod
    def desk_scale(cls, input_dim: int, heads: int = 3, seed: int = 0) -> "ModelConfig":
        return cls(input_dim=input_dim, conv_channels=16, gru_units=32,
                   embedding_dim=16, heads=heads, seed=seed)


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 64
    learning_rate: float = 0.0005
    max_epochs: int = 100
    patience: int = 10
    loss_weights: LossWeights = field(default_factory=LossWeights)
    use_variance_targets: bool = False

    def __post_init__(self):
        if self.batch_size < 2:
            raise ValueError("batch_size must be at least 2")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.max_epochs < 1 or self.patience < 1:
            raise ValueError("max_epochs and patience must be >= 1")

    @classmethod
    def desk_scale(cls, **overrides) -> "TrainConfig":
        overrides.setdefault("batch_size", 16)
        return cls(**overrides)


def param_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Tensor names and shapes in their canonical (initialization) order."""
    shapes: dict[str, tuple[int, ...]] = {
        "conv_w": (cfg.conv_kernel, cfg.input_dim, cfg.conv_channels),
        "conv_b": (cfg.conv_channels,),
    }
    in_dim = cfg.conv_channels
    for layer in range(cfg.gru_layers):
        u = cfg.gru_units
        shapes[f"gru{layer}_w_ih"] = (3 * u, in_dim)
        shapes[f"gru{layer}_w_hh"] = (3 * u, u)
        shapes[f"gru{layer}_b_ih"] = (3 * u,)
        shapes[f"gru{layer}_b_hh"] = (3 * u,)
        in_dim = u
    shapes["emb_w"] = (cfg.embedding_dim, cfg.gru_units)
    shapes["emb_b"] = (cfg.embedding_dim,)
    shapes["head_w"] = (cfg.heads, cfg.embedding_dim)
    shapes["head_b"] = (cfg.heads,)
    return shapes


def parameter_count(cfg: ModelConfig) -> int:
    return sum(int(np.prod(s)) for s in param_shapes(cfg).values())


@dataclass
class RegressorModel:
    config: ModelConfig
    params: dict[str, np.ndarray]

    @property
    def parameter_count(self) -> int:
        return sum(p.size for p in self.params.values())

    def copy(self) -> "RegressorModel":
        return RegressorModel(self.config, {k: v.copy() for k, v in self.params.items()})


def init_model(cfg: ModelConfig) -> RegressorModel:
    """Deterministic initialization from cfg.seed.

    Weights are uniform in +-sqrt(6 / (fan_in + fan_out)); biases are zero.
    For the convolution tensor fan_in is kernel*input_dim and fan_out is
    kernel*channels; matrices use (columns, rows). Tensors are drawn in
    :func:`param_shapes` order.
    """
    rng = np.random.default_rng(derive_seed(cfg.seed, "init"))
    params: dict[str, np.ndarray] = {}
    for name, shape in param_shapes(cfg).items():
        if name.endswith("_b") or "_b_" in name:
            params[name] = np.zeros(shape)
            continue
        if name == "conv_w":
            fan_in = cfg.conv_kernel * cfg.input_dim
            fan_out = cfg.conv_kernel * cfg.conv_channels
        else:
            fan_out, fan_in = shape
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        params[name] = rng.uniform(-limit, limit, size=shape)
    return RegressorModel(cfg, params)


def _conv_forward(params, cfg, x):
    """Same-length 1-D convolution over time followed by tanh."""
    m = x.shape[0]
    k = cfg.conv_kernel
    pad = (k - 1) // 2
    xp = np.zeros((m + k - 1, x.shape[1]))
    xp[pad:pad + m] = x
    # (m, k*d) patch matrix: row t holds frames t-pad .. t+pad flattened
    windows = np.lib.stride_tricks.sliding_window_view(xp, k, axis=0)  # (m, d, k)
    pm = np.ascontiguousarray(windows.transpose(0, 2, 1)).reshape(m, k * x.shape[1])
    act = pm @ params["conv_w"].reshape(k * x.shape[1], -1) + params["conv_b"]
    return np.tanh(act), pm


def _gru_forward(w_ih, w_hh, b_ih, b_hh, inputs):
    """Run one GRU layer over (m, in) inputs; returns outputs and step caches."""
    m = inputs.shape[0]
    u = w_hh.shape[1]
    gi = inputs @ w_ih.T + b_ih  # (m, 3u), input contributions for all steps
    r_s = np.empty((m, u)); z_s = np.empty((m, u)); n_s = np.empty((m, u))
    hn_s = np.empty((m, u)); hprev_s = np.empty((m, u)); h_s = np.empty((m, u))
    h = np.zeros(u)
    for t in range(m):
        gh = w_hh @ h + b_hh
        r = _sigmoid(gi[t, :u] + gh[:u])
        z = _sigmoid(gi[t, u:2 * u] + gh[u:2 * u])
        hn = gh[2 * u:]
        n = np.tanh(gi[t, 2 * u:] + r * hn)
        hprev_s[t] = h
        h = (1.0 - z) * n + z * h
        r_s[t], z_s[t], n_s[t], hn_s[t], h_s[t] = r, z, n, hn, h
    return h_s, (inputs, r_s, z_s, n_s, hn_s, hprev_s)


def _gru_backward(w_ih, w_hh, cache, g_out):
    """BPTT for one layer. g_out is the per-step external gradient (m, u).

    Returns (g_w_ih, g_w_hh, g_b_ih, g_b_hh, g_inputs).
    """
    inputs, r_s, z_s, n_s, hn_s, hprev_s = cache
    m, u = g_out.shape
    da = np.empty((m, 3 * u))   # pre-activation grads, packed (r, z, n)
    dh = np.empty((m, 3 * u))   # recurrent-side grads, packed (r, z, n-gate)
    g_h = np.zeros(u)
    for t in range(m - 1, -1, -1):
        g_h = g_h + g_out[t]
        r, z, n, hn, hprev = r_s[t], z_s[t], n_s[t], hn_s[t], hprev_s[t]
        da_z = g_h * (hprev - n) * z * (1.0 - z)
        da_n = g_h * (1.0 - z) * (1.0 - n * n)
        da_r = da_n * hn * r * (1.0 - r)
        g_hn = da_n * r
        da[t, :u], da[t, u:2 * u], da[t, 2 * u:] = da_r, da_z, da_n
        dh[t, :u], dh[t, u:2 * u], dh[t, 2 * u:] = da_r, da_z, g_hn
        g_h = g_h * z + dh[t] @ w_hh
    return da.T @ inputs, dh.T @ hprev_s, da.sum(axis=0), dh.sum(axis=0), da @ w_ih


def _forward_one(params, cfg, x):
    hc, pm = _conv_forward(params, cfg, x)
    layer_caches = []
    h = hc
    for layer in range(cfg.gru_layers):
        h, cache = _gru_forward(
            params[f"gru{layer}_w_ih"], params[f"gru{layer}_w_hh"],
            params[f"gru{layer}_b_ih"], params[f"gru{layer}_b_hh"], h,
        )
        layer_caches.append(cache)
    pooled = h.mean(axis=0)
    emb = np.tanh(params["emb_w"] @ pooled + params["emb_b"])
    out = params["head_w"] @ emb + params["head_b"]
    return out, {"pm": pm, "hc": hc, "layers": layer_caches, "pooled": pooled,
                 "emb": emb, "n_frames": x.shape[0]}


def forward(model: RegressorModel, sequences) -> tuple[np.ndarray, list[dict]]:
    """Predictions (heads, batch) and per-utterance caches for the backward pass."""
    cfg = model.config
    preds = np.empty((cfg.heads, len(sequences)))
    caches = []
    for i, seq in enumerate(sequences):
        x = check_embedding_matrix(seq)
        if x.shape[1] != cfg.input_dim:
            raise ValueError(f"sequence {i} has {x.shape[1]} dims, model expects {cfg.input_dim}")
        out, cache = _forward_one(model.params, cfg, x)
        if not np.all(np.isfinite(out)):
            raise FloatingPointError(f"non-finite activation on sequence {i}")
        preds[:, i] = out
        caches.append(cache)
    return preds, caches


def zero_gradients(cfg: ModelConfig) -> dict[str, np.ndarray]:
    return {name: np.zeros(shape) for name, shape in param_shapes(cfg).items()}


def backward(model: RegressorModel, caches, grad_preds) -> dict[str, np.ndarray]:
    """Exact gradients of a scalar loss given its gradient at the predictions.

    ``grad_preds`` has shape (heads, batch), matching :func:`forward` output;
    utterances are accumulated in batch order.
    """
    cfg = model.config
    params = model.params
    grad_preds = np.asarray(grad_preds, dtype=np.float64)
    if grad_preds.shape != (cfg.heads, len(caches)):
        raise ValueError(f"grad_preds shape {grad_preds.shape} does not match "
                         f"({cfg.heads}, {len(caches)})")
    grads = zero_gradients(cfg)
    k = cfg.conv_kernel
    for i, cache in enumerate(caches):
        g_out = grad_preds[:, i]
        emb, pooled = cache["emb"], cache["pooled"]
        grads["head_w"] += np.outer(g_out, emb)
        grads["head_b"] += g_out
        g_emb = params["head_w"].T @ g_out
        g_ae = g_emb * (1.0 - emb * emb)
        grads["emb_w"] += np.outer(g_ae, pooled)
        grads["emb_b"] += g_ae
        g_pool = params["emb_w"].T @ g_ae

        m = cache["n_frames"]
        g_seq = np.tile(g_pool / m, (m, 1))
        for layer in range(cfg.gru_layers - 1, -1, -1):
            g_w_ih, g_w_hh, g_b_ih, g_b_hh, g_seq = _gru_backward(
                params[f"gru{layer}_w_ih"], params[f"gru{layer}_w_hh"],
                cache["layers"][layer], g_seq,
            )
            grads[f"gru{layer}_w_ih"] += g_w_ih
            grads[f"gru{layer}_w_hh"] += g_w_hh
            grads[f"gru{layer}_b_ih"] += g_b_ih
            grads[f"gru{layer}_b_hh"] += g_b_hh

        hc = cache["hc"]
        g_act = g_seq * (1.0 - hc * hc)
        grads["conv_w"] += (cache["pm"].T @ g_act).reshape(k, cfg.input_dim, cfg.conv_channels)
        grads["conv_b"] += g_act.sum(axis=0)
    return grads


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    ccc_v: float
    ccc_a: float
    ccc_d: float

    @property
    def mean_ccc(self) -> float:
        return (self.ccc_v + self.ccc_a + self.ccc_d) / 3.0


@dataclass
class TrainHistory:
    epochs: list[EpochStats]
    selected_epoch: int = -1

    @property
    def best_mean_ccc(self) -> float:
        return self.epochs[self.selected_epoch].mean_ccc

    def write_csv(self, dest) -> None:
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["epoch", "train_loss", "ccc_v", "ccc_a", "ccc_d", "selected"])
            for st in self.epochs:
                writer.writerow([st.epoch, repr(st.train_loss), repr(st.ccc_v),
                                 repr(st.ccc_a), repr(st.ccc_d),
                                 int(st.epoch == self.selected_epoch)])


def _validation_ccc(model, sequences, mean_targets) -> tuple[float, float, float]:
    preds, _ = forward(model, sequences)
    values = []
    for d in range(3):
        try:
            values.append(ccc(preds[d], mean_targets[:, d]).value)
        except Exception:
            values.append(0.0)  # fully degenerate validation batch
    return tuple(values)


def train(model: RegressorModel, train_sequences, train_targets,
          valid_sequences, valid_targets, tcfg: TrainConfig
          ) -> tuple[RegressorModel, TrainHistory]:
    """SGD training with per-epoch seeded shuffles and early stopping.

    ``train_targets`` is (n, 3), or (n, 6) when variance targets are enabled
    (columns mean_v, mean_a, mean_d, var_v, var_a, var_d). Validation always
    scores the three mean dimensions; the parameters of the best-validation
    epoch are restored on exit. Raises :class:`TrainingDiverged` on a
    non-finite loss, carrying the history accumulated so far.
    """
    cfg = model.config
    want_cols = 6 if tcfg.use_variance_targets else 3
    if tcfg.use_variance_targets and cfg.heads != 6:
        raise ValueError("variance targets require a 6-head model")
    train_targets = np.asarray(train_targets, dtype=np.float64)
    valid_targets = np.asarray(valid_targets, dtype=np.float64)
    if train_targets.ndim != 2 or train_targets.shape[1] < want_cols:
        raise ValueError(f"train targets need {want_cols} columns, got {train_targets.shape}")
    if len(train_sequences) != train_targets.shape[0]:
        raise ValueError("train sequences and targets are misaligned")
    if len(train_sequences) < 2 or not valid_sequences:
        raise ValueError("need at least 2 training utterances and a non-empty valid split")
    target_rows = train_targets[:, :want_cols]
    valid_means = valid_targets[:, :3]
    loss_grad = ccc_loss_with_variance_grad if tcfg.use_variance_targets else ccc_loss_grad

    work = model.copy()
    n = len(train_sequences)
    history = TrainHistory(epochs=[])
    best: dict[str, np.ndarray] | None = None
    best_ccc = -np.inf
    best_epoch = -1
    stale = 0
    for epoch in range(tcfg.max_epochs):
        rng = np.random.default_rng(derive_seed(cfg.seed, "shuffle", str(epoch)))
        perm = rng.permutation(n)
        batch_losses = []
        for start in range(0, n, tcfg.batch_size):
            idx = perm[start:start + tcfg.batch_size]
            if idx.shape[0] < 2:
                continue  # concordance needs at least two samples
            batch = [train_sequences[i] for i in idx]
            try:
                preds, caches = forward(work, batch)
                loss, g_pred = loss_grad(preds, target_rows[idx].T, tcfg.loss_weights)
            except FloatingPointError as exc:
                history.selected_epoch = max(best_epoch, 0)
                raise TrainingDiverged(f"divergence at epoch {epoch}: {exc}", history) from exc
            if not np.isfinite(loss):
                history.selected_epoch = max(best_epoch, 0)
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}", history)
            grads = backward(work, caches, g_pred)
            for name, g in grads.items():
                work.params[name] -= tcfg.learning_rate * g
            batch_losses.append(loss)
        ccc_v, ccc_a, ccc_d = _validation_ccc(work, valid_sequences, valid_means)
        stats = EpochStats(epoch, float(np.mean(batch_losses)), ccc_v, ccc_a, ccc_d)
        history.epochs.append(stats)
        if stats.mean_ccc > best_ccc:
            best_ccc = stats.mean_ccc
            best_epoch = epoch
            best = {k: v.copy() for k, v in work.params.items()}
            stale = 0
        else:
            stale += 1
            if stale >= tcfg.patience:
                break
    history.selected_epoch = best_epoch
    return RegressorModel(cfg, best), history


@dataclass
class EvalSummary:
    per_dim: dict[str, CccBreakdown]
    bins: dict[str, BinnedMse]
    predictions: np.ndarray  # (heads, n)

    @property
    def mean_ccc(self) -> float:
        return float(np.mean([self.per_dim[d].value for d in DIMENSION_NAMES]))


def evaluate(model: RegressorModel, sequences, mean_targets, bin_edges=None) -> EvalSummary:
    """Full-split forward pass plus per-dimension concordance and binned MSE."""
    if not sequences:
        raise ValueError("cannot evaluate an empty split")
    mean_targets = np.asarray(mean_targets, dtype=np.float64)[:, :3]
    preds, _ = forward(model, sequences)
    per_dim: dict[str, CccBreakdown] = {}
    bins: dict[str, BinnedMse] = {}
    for d, name in enumerate(DIMENSION_NAMES):
        per_dim[name] = ccc(preds[d], mean_targets[:, d])
        bins[name] = mse_by_bin(preds[d], mean_targets[:, d], bin_edges)
    return EvalSummary(per_dim=per_dim, bins=bins, predictions=preds)


def model_size_report(configs: list[ModelConfig]) -> list[dict]:
    """Parameter counts, 32-bit sizes, and reduction vs. the widest config.

    The configs must differ only in ``input_dim``.
    """
    if not configs:
        raise ValueError("no configs given")
    normal = [replace(c, input_dim=1) for c in configs]
    if any(c != normal[0] for c in normal[1:]):
        raise ValueError("configs must differ only in input_dim")
    baseline_bytes = 4 * parameter_count(max(configs, key=lambda c: c.input_dim))
    rows = []
    for cfg in configs:
        count = parameter_count(cfg)
        size = 4 * count
        rows.append({
            "input_dim": cfg.input_dim,
            "parameter_count": count,
            "param_bytes": size,
            "rel_reduction": 1.0 - size / baseline_bytes,
        })
    return rows


def save_checkpoint(model: RegressorModel, dest, selection: dict | None = None) -> None:
    """Self-describing checkpoint: JSON header (config, selection, tensor
    names/shapes) followed by float64 little-endian payloads in header order."""
    names = list(param_shapes(model.config))
    header = {
        "config": asdict(model.config),
        "selection": selection,
        "tensors": [{"name": n, "shape": list(model.params[n].shape)} for n in names],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(dest, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for n in names:
            fh.write(model.params[n].astype("<f8").tobytes(order="C"))


def load_checkpoint(src) -> tuple[RegressorModel, dict | None]:
    raw = Path(src).read_bytes()
    if not raw.startswith(CHECKPOINT_MAGIC):
        raise FormatError(f"{src}: not a model checkpoint")
    off = len(CHECKPOINT_MAGIC)
    (hlen,) = struct.unpack_from("<Q", raw, off)
    off += 8
    header = json.loads(raw[off:off + hlen].decode("utf-8"))
    off += hlen
    cfg = ModelConfig(**header["config"])
    params: dict[str, np.ndarray] = {}
    for spec in header["tensors"]:
        shape = tuple(spec["shape"])
        count = int(np.prod(shape))
        params[spec["name"]] = (
            np.frombuffer(raw, dtype="<f8", count=count, offset=off).reshape(shape).copy()
        )
        off += 8 * count
    if off != len(raw):
        raise FormatError(f"{src}: {len(raw) - off} trailing bytes after tensor payload")
    model = RegressorModel(cfg, params)
    if list(params) != list(param_shapes(cfg)):
        raise FormatError(f"{src}: tensor names do not match the config architecture")
    return model, header.get("selection")


class TcGruRegressor(BaseEstimator):
    """sklearn-style wrapper around the TC-GRU training loop.

    X is a list of (frames, input_dim) arrays (frame counts may differ);
    y is (n, 3) mean labels, or (n, 6) with grader variances appended when
    ``use_variance_targets`` is set. A held-out validation set drives early
    stopping; pass one explicitly via ``fit(..., validation=(Xv, yv))`` or a
    seeded random split of ``validation_fraction`` is carved out of X.
    """

    def __init__(self, conv_channels: int = 16, gru_units: int = 32,
                 embedding_dim: int = 16, conv_kernel: int = 3, gru_layers: int = 2,
                 batch_size: int = 16, learning_rate: float = 0.0005,
                 max_epochs: int = 100, patience: int = 10,
                 alpha: float = 1.0 / 3.0, beta: float = 1.0 / 3.0,
                 use_variance_targets: bool = False,
                 validation_fraction: float = 0.15, seed: int = 0):
        self.conv_channels = conv_channels
        self.gru_units = gru_units
        self.embedding_dim = embedding_dim
        self.conv_kernel = conv_kernel
        self.gru_layers = gru_layers
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.max_epochs = max_epochs
        self.patience = patience
        self.alpha = alpha
        self.beta = beta
        self.use_variance_targets = use_variance_targets
        self.validation_fraction = validation_fraction
        self.seed = seed

    def _configs(self, input_dim: int) -> tuple[ModelConfig, TrainConfig]:
        mcfg = ModelConfig(
            input_dim=input_dim, conv_channels=self.conv_channels,
            gru_units=self.gru_units, embedding_dim=self.embedding_dim,
            heads=6 if self.use_variance_targets else 3,
            conv_kernel=self.conv_kernel, gru_layers=self.gru_layers, seed=self.seed,
        )
        tcfg = TrainConfig(
            batch_size=self.batch_size, learning_rate=self.learning_rate,
            max_epochs=self.max_epochs, patience=self.patience,
            loss_weights=LossWeights(self.alpha, self.beta),
            use_variance_targets=self.use_variance_targets,
        )
        return mcfg, tcfg

    def fit(self, X, y, validation=None):
        y = np.asarray(y, dtype=np.float64)
        if validation is None:
            n = len(X)
            n_valid = max(1, int(round(n * self.validation_fraction)))
            if n - n_valid < 2:
                raise ValueError("not enough samples to carve out a validation split")
            perm = np.random.default_rng(derive_seed(self.seed, "valsplit")).permutation(n)
            valid_idx, train_idx = perm[:n_valid], perm[n_valid:]
            X_valid = [X[i] for i in valid_idx]
            y_valid = y[valid_idx]
            X_train = [X[i] for i in train_idx]
            y_train = y[train_idx]
        else:
            X_train, y_train = X, y
            X_valid, y_valid = validation
            y_valid = np.asarray(y_valid, dtype=np.float64)
        input_dim = check_embedding_matrix(X_train[0]).shape[1]
        mcfg, tcfg = self._configs(input_dim)
        model = init_model(mcfg)
        self.model_, self.history_ = train(model, X_train, y_train, X_valid, y_valid, tcfg)
        self.n_features_in_ = input_dim
        return self

    def predict(self, X) -> np.ndarray:
        if not hasattr(self, "model_"):
            raise RuntimeError("TcGruRegressor is not fitted")
        preds, _ = forward(self.model_, X)
        return preds.T

    def score(self, X, y) -> float:
        """Mean concordance over the three mean-label dimensions (not R^2)."""
        summary = evaluate(self.model_, X, np.asarray(y, dtype=np.float64))
        return summary.mean_ccc
