"""Independent brute-force implementations used as test oracles.

Everything here is written with plain Python loops and math.fsum, on purpose:
these are direct transcriptions of the defining formulas, sharing no code
path with the package.
"""

import math
from collections import Counter

import numpy as np


def naive_abs_corr(x, y) -> float:
    x = [float(v) for v in x]
    y = [float(v) for v in y]
    n = len(x)
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    cov = math.fsum((a - mx) * (b - my) for a, b in zip(x, y)) / n
    vx = math.fsum((a - mx) ** 2 for a in x) / n
    vy = math.fsum((b - my) ** 2 for b in y) / n
    if vx == 0.0 or vy == 0.0:
        return 0.0
    return abs(cov / math.sqrt(vx * vy))


def naive_ccc(x, y) -> float:
    x = [float(v) for v in x]
    y = [float(v) for v in y]
    n = len(x)
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    vx = math.fsum((a - mx) ** 2 for a in x) / n
    vy = math.fsum((b - my) ** 2 for b in y) / n
    cov = math.fsum((a - mx) * (b - my) for a, b in zip(x, y)) / n
    rho = cov / math.sqrt(vx * vy)
    return 2.0 * rho * math.sqrt(vx) * math.sqrt(vy) / (vx + vy + (mx - my) ** 2)


def naive_quantile_bins(values, bins: int):
    values = [float(v) for v in values]
    order = sorted(range(len(values)), key=lambda i: (values[i], i))
    assignment = [0] * len(values)
    for rank, idx in enumerate(order):
        assignment[idx] = rank * bins // len(values)
    return assignment


def naive_mi(x, y, bins: int) -> float:
    bx = naive_quantile_bins(x, bins)
    by = naive_quantile_bins(y, bins)
    n = len(bx)
    joint = Counter(zip(bx, by))
    cx = Counter(bx)
    cy = Counter(by)
    total = 0.0
    for (a, b), c in joint.items():
        p = c / n
        total += p * math.log(p / ((cx[a] / n) * (cy[b] / n)))
    return total


def naive_saliency(pooled, labels, method: str, bins: int = 16):
    """Double-loop transcription of the saliency score definitions.

    Returns (per_label, aggregated) as plain nested lists.
    """
    pooled = np.asarray(pooled, dtype=float)
    labels = np.asarray(labels, dtype=float)
    n, n_dims = pooled.shape

    def dep(a, b):
        if method == "CCS":
            return naive_abs_corr(a, b)
        return naive_mi(a, b, bins)

    per_label = [[0.0] * labels.shape[1] for _ in range(n_dims)]
    for li in range(labels.shape[1]):
        weights = [dep(pooled[:, j], labels[:, li]) for j in range(n_dims)]
        for k in range(n_dims):
            gam = math.fsum(
                weights[j] * dep(pooled[:, k], pooled[:, j])
                for j in range(n_dims) if j != k
            ) / (n_dims - 1)
            per_label[k][li] = weights[k] + gam
    aggregated = [math.fsum(row) / len(row) for row in per_label]
    return per_label, aggregated


def closed_form_param_count(input_dim, conv_channels, gru_units, embedding_dim,
                            heads, kernel=3, layers=2) -> int:
    conv = kernel * input_dim * conv_channels + conv_channels
    total = conv
    in_dim = conv_channels
    for _ in range(layers):
        total += 3 * (in_dim * gru_units + gru_units * gru_units + 2 * gru_units)
        in_dim = gru_units
    total += gru_units * embedding_dim + embedding_dim
    total += embedding_dim * heads + heads
    return total


def _sig(v: float) -> float:
    return 1.0 / (1.0 + math.exp(-v))


def oracle_tcgru_forward(params, cfg, x):
    """Step-by-step scalar recomputation of the model's forward pass."""
    x = np.asarray(x, dtype=float)
    m, d = x.shape
    k = cfg.conv_kernel
    pad = (k - 1) // 2
    c = cfg.conv_channels
    conv = np.zeros((m, c))
    for t in range(m):
        for ch in range(c):
            acc = params["conv_b"][ch]
            for kk in range(k):
                ti = t + kk - pad
                if 0 <= ti < m:
                    for dd in range(d):
                        acc += params["conv_w"][kk, dd, ch] * x[ti, dd]
            conv[t, ch] = math.tanh(acc)

    seq = conv
    u = cfg.gru_units
    for layer in range(cfg.gru_layers):
        w_ih = params[f"gru{layer}_w_ih"]
        w_hh = params[f"gru{layer}_w_hh"]
        b_ih = params[f"gru{layer}_b_ih"]
        b_hh = params[f"gru{layer}_b_hh"]
        h = np.zeros(u)
        outputs = np.zeros((m, u))
        for t in range(m):
            gi = w_ih @ seq[t] + b_ih
            gh = w_hh @ h + b_hh
            new_h = np.zeros(u)
            for j in range(u):
                r = _sig(gi[j] + gh[j])
                z = _sig(gi[u + j] + gh[u + j])
                nn = math.tanh(gi[2 * u + j] + r * gh[2 * u + j])
                new_h[j] = (1.0 - z) * nn + z * h[j]
            h = new_h
            outputs[t] = h
        seq = outputs

    pooled = np.array([math.fsum(seq[:, j]) / m for j in range(u)])
    emb = np.tanh(params["emb_w"] @ pooled + params["emb_b"])
    return params["head_w"] @ emb + params["head_b"]


def finite_difference_gradients(loss_fn, params, h=1e-5):
    """Central finite differences of loss_fn() w.r.t. every entry of params."""
    grads = {}
    for name, tensor in params.items():
        g = np.zeros_like(tensor)
        flat = tensor.ravel()
        gflat = g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            lp = loss_fn()
            flat[i] = orig - h
            lm = loss_fn()
            flat[i] = orig
            gflat[i] = (lp - lm) / (2.0 * h)
        grads[name] = g
    return grads


def max_relative_error(analytic, numeric, floor=1e-4) -> float:
    """Worst |a - b| / max(|a|, |b|, floor) across matching tensors.

    The floor turns the comparison absolute for entries near zero, where
    finite differences carry only round-off.
    """
    worst = 0.0
    for name in analytic:
        a = np.asarray(analytic[name]).ravel()
        b = np.asarray(numeric[name]).ravel()
        denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
        worst = max(worst, float(np.max(np.abs(a - b) / denom)))
    return worst
