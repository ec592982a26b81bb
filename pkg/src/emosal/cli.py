"""Command-line pipeline: gen, saliency, select, train, eval, degrade, sweep, report.

Every command writes a ``config.json`` echo into its output directory that is
sufficient to reproduce the run, exits 0 only when all artifacts were
written, and derives all randomness from the given seed. Sweep cells are
independent, cached by config hash, and may run in parallel.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from . import degrade as degrade_mod
from . import model as model_mod
from . import pca as pca_mod
from . import saliency as saliency_mod
from .metrics import LossWeights, write_evaluation_csv
from .utils import derive_seed, round_half_up


def _write_echo(out_dir: Path, payload: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _load_json(path: Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _synthetic_spec_from_dict(data: dict) -> corpus_mod.SyntheticSpec:
    try:
        return corpus_mod.SyntheticSpec(
            n_utterances=int(data["n_utterances"]),
            n_dims=int(data["n_dims"]),
            frames_range=(int(data["frames_range"][0]), int(data["frames_range"][1])),
            informative_dims=tuple(int(k) for k in data["informative_dims"]),
            noise_scale=float(data["noise_scale"]),
            variance_profile=str(data.get("variance_profile", "homoscedastic")),
            seed=int(data.get("seed", 0)),
        )
    except KeyError as exc:
        raise ValueError(f"synthetic spec is missing field {exc}") from exc


def cmd_gen(args) -> None:
    spec_data = _load_json(Path(args.spec))
    spec = _synthetic_spec_from_dict(spec_data)
    spec.validate()  # fail before creating anything
    out = Path(args.out)
    corpus_mod.generate_synthetic(spec, out)
    _write_echo(out, {"command": "gen", "spec": spec_data})
    print(f"wrote corpus with {spec.n_utterances} utterances to {out}")


def _train_pooled(corpus: corpus_mod.Corpus):
    records = corpus.for_split("train")
    if not records:
        raise ValueError("corpus has no training split")
    pooled, labels = corpus_mod.pool_corpus(corpus, records)
    return records, pooled, labels


def cmd_saliency(args) -> None:
    corpus = corpus_mod.load_manifest(Path(args.manifest))
    method = args.method.upper()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    records, pooled, labels = _train_pooled(corpus)
    if method == "PCA":
        d = round_half_up(args.fraction * corpus.n_dims)
        if d < 1:
            raise ValueError(f"fraction {args.fraction} keeps no dimensions")
        frames = pca_mod.subsample_frames(
            corpus.sequences(records), seed=derive_seed(args.seed, "pca")
        )
        proj = pca_mod.fit_pca(frames, d)
        pca_mod.write_projection(proj, out / "projection.pcap")
        with open(out / "explained_variance.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["component", "explained_variance"])
            for i, v in enumerate(proj.explained_variance):
                writer.writerow([i, format(v, ".9g")])
        print(f"wrote PCA projection ({d} components) to {out}")
    else:
        scores = saliency_mod.score_saliency(pooled, labels[:, :3], method=method, bins=args.bins)
        mask = saliency_mod.rank_and_select(scores, args.fraction)
        saliency_mod.write_saliency_report(scores, mask, out / "saliency.csv")
        saliency_mod.write_selection_mask(mask, out / "mask.txt")
        print(f"wrote {method} report and mask ({len(mask.kept)}/{corpus.n_dims} dims) to {out}")
    _write_echo(out, {
        "command": "saliency", "manifest": str(args.manifest), "method": method,
        "bins": args.bins, "fraction": args.fraction, "seed": args.seed,
    })


def cmd_select(args) -> None:
    report = saliency_mod.read_saliency_report(Path(args.report))
    mask = saliency_mod.select_top_fraction(report["aggregated"], args.fraction, args.method)
    saliency_mod.write_selection_mask(mask, Path(args.out))
    print(f"kept {len(mask.kept)}/{mask.source_dims} dims -> {args.out}")


def _model_train_configs(args, input_dim: int):
    mcfg = model_mod.ModelConfig(
        input_dim=input_dim,
        conv_channels=args.conv_channels,
        gru_units=args.gru_units,
        embedding_dim=args.embedding_dim,
        heads=6 if args.variance_targets else 3,
        conv_kernel=args.conv_kernel,
        gru_layers=args.gru_layers,
        seed=args.seed,
    )
    tcfg = model_mod.TrainConfig(
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        max_epochs=args.max_epochs,
        patience=args.patience,
        loss_weights=LossWeights(args.alpha, args.beta),
        use_variance_targets=args.variance_targets,
    )
    return mcfg, tcfg


def _selection_from_args(mask_path, projection_path):
    """Load the input transform; returns (selection_info, transform, n_cols)."""
    if mask_path and projection_path:
        raise ValueError("give either --mask or --projection, not both")
    if mask_path:
        mask = saliency_mod.read_selection_mask(Path(mask_path))
        info = {"kind": "mask", "kept": list(mask.kept), "source_dims": mask.source_dims,
                "method": mask.method, "fraction": mask.fraction}
        return info, (lambda seq: saliency_mod.apply_mask(seq, mask)), len(mask.kept)
    if projection_path:
        proj = pca_mod.read_projection(Path(projection_path))
        info = {"kind": "pca", "mean": proj.mean.tolist(),
                "components": proj.components.tolist(),
                "explained_variance": proj.explained_variance.tolist()}
        return info, (lambda seq: pca_mod.apply_pca(seq, proj)), proj.n_components
    return None, (lambda seq: seq), None


def _selection_from_info(info):
    if info is None:
        return lambda seq: seq
    if info["kind"] == "mask":
        mask = saliency_mod.SelectionMask(
            kept=tuple(info["kept"]), source_dims=info["source_dims"],
            method=info["method"], fraction=info["fraction"],
        )
        return lambda seq: saliency_mod.apply_mask(seq, mask)
    proj = pca_mod.PcaProjection(
        mean=np.array(info["mean"]),
        components=np.array(info["components"]),
        explained_variance=np.array(info["explained_variance"]),
    )
    return lambda seq: pca_mod.apply_pca(seq, proj)


def _split_data(corpus, split, transform, n_label_cols):
    records = corpus.for_split(split)
    if not records:
        raise ValueError(f"corpus has no {split} split")
    _, labels = corpus_mod.pool_corpus(corpus, records)
    sequences = [transform(corpus.load_sequence(r)) for r in records]
    return records, sequences, labels[:, :n_label_cols]


def cmd_train(args) -> None:
    if args.config:
        echo = _load_json(Path(args.config))
        ns = argparse.Namespace(**vars(args))
        ns.manifest = echo["manifest"]
        ns.mask = echo.get("mask")
        ns.projection = echo.get("projection")
        for key, value in echo["model"].items():
            setattr(ns, key, value)
        for key, value in echo["train"].items():
            setattr(ns, key, value)
        ns.config = None
        args = ns
    if not args.manifest:
        raise ValueError("--manifest is required (directly or via --config)")
    corpus = corpus_mod.load_manifest(Path(args.manifest))
    info, transform, n_cols = _selection_from_args(args.mask, args.projection)
    input_dim = n_cols if n_cols is not None else corpus.n_dims
    n_targets = 6 if args.variance_targets else 3
    _, train_seqs, train_targets = _split_data(corpus, "train", transform, n_targets)
    _, valid_seqs, valid_targets = _split_data(corpus, "valid", transform, 3)

    mcfg, tcfg = _model_train_configs(args, input_dim)
    model = model_mod.init_model(mcfg)
    trained, history = model_mod.train(
        model, train_seqs, train_targets, valid_seqs, valid_targets, tcfg
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model_mod.save_checkpoint(trained, out / "checkpoint.tcgru", selection=info)
    history.write_csv(out / "history.csv")
    _write_echo(out, {
        "command": "train", "manifest": str(args.manifest),
        "mask": args.mask, "projection": args.projection,
        "model": {"conv_channels": args.conv_channels, "gru_units": args.gru_units,
                  "embedding_dim": args.embedding_dim, "conv_kernel": args.conv_kernel,
                  "gru_layers": args.gru_layers, "seed": args.seed},
        "train": {"batch_size": args.batch_size, "learning_rate": args.learning_rate,
                  "max_epochs": args.max_epochs, "patience": args.patience,
                  "alpha": args.alpha, "beta": args.beta,
                  "variance_targets": args.variance_targets},
    })
    best = history.epochs[history.selected_epoch]
    print(f"trained {trained.parameter_count} params; best epoch {best.epoch} "
          f"mean validation ccc {best.mean_ccc:.4f}")


def cmd_eval(args) -> None:
    model, info = model_mod.load_checkpoint(Path(args.checkpoint))
    corpus = corpus_mod.load_manifest(Path(args.manifest))
    transform = _selection_from_info(info)
    _, sequences, targets = _split_data(corpus, args.split, transform, 3)
    summary = model_mod.evaluate(model, sequences, targets)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_evaluation_csv(out / "evaluation.csv", args.split, summary.per_dim, summary.bins)
    _write_echo(out, {"command": "eval", "checkpoint": str(args.checkpoint),
                      "manifest": str(args.manifest), "split": args.split})
    print(f"{args.split} mean ccc {summary.mean_ccc:.4f} -> {out / 'evaluation.csv'}")


def cmd_degrade(args) -> None:
    corpus = corpus_mod.load_manifest(Path(args.manifest))
    spec = degrade_mod.DegradeSpec(snr_db=args.snr_db, seed=args.seed)
    out = Path(args.out)
    degrade_mod.degrade_corpus(corpus, spec, out)
    _write_echo(out, {"command": "degrade", "manifest": str(args.manifest),
                      "snr_db": args.snr_db, "seed": args.seed})
    print(f"wrote corpus degraded to {args.snr_db:g} dB at {out}")


RESULT_COLUMNS = ("method", "fraction", "variance", "snr",
                  "ccc_v", "ccc_a", "ccc_d", "param_bytes", "rel_reduction")


def _resolve_sweep_config(path: Path) -> dict:
    raw = _load_json(path)
    manifest = Path(raw["manifest"])
    if not manifest.is_absolute():
        manifest = (path.parent / manifest).resolve()
    cfg = {
        "manifest": str(manifest),
        "methods": [str(m).upper() for m in raw.get("methods", ["CCS"])],
        "fractions": [float(f) for f in raw.get("fractions", [1.0])],
        "variance_targets": [bool(v) for v in raw.get("variance_targets", [False])],
        "snrs_db": [None if s is None else float(s) for s in raw.get("snrs_db", [None])],
        "bins": int(raw.get("bins", saliency_mod.DEFAULT_MI_BINS)),
        "model": dict(raw.get("model", {})),
        "train": dict(raw.get("train", {})),
        "seed": int(raw.get("seed", 0)),
    }
    for m in cfg["methods"]:
        if m not in ("CCS", "MIS", "PCA"):
            raise ValueError(f"unknown sweep method {m!r}")
    return cfg


def _cell_name(method: str, fraction: float, variance: bool) -> str:
    return f"{method}_f{fraction:g}_{'w' if variance else 'wo'}"


def _config_hash(cfg: dict, cell: str) -> str:
    canon = json.dumps(cfg, sort_keys=True) + "|" + cell
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _model_cfg_for_cell(cfg: dict, input_dim: int, variance: bool, seed: int):
    fields = dict(cfg["model"])
    return model_mod.ModelConfig(
        input_dim=input_dim,
        conv_channels=int(fields.get("conv_channels", 16)),
        gru_units=int(fields.get("gru_units", 32)),
        embedding_dim=int(fields.get("embedding_dim", 16)),
        heads=6 if variance else 3,
        conv_kernel=int(fields.get("conv_kernel", 3)),
        gru_layers=int(fields.get("gru_layers", 2)),
        seed=seed,
    )


def _train_cfg_for_cell(cfg: dict, variance: bool):
    fields = dict(cfg["train"])
    return model_mod.TrainConfig(
        batch_size=int(fields.get("batch_size", 16)),
        learning_rate=float(fields.get("learning_rate", 0.0005)),
        max_epochs=int(fields.get("max_epochs", 50)),
        patience=int(fields.get("patience", 10)),
        loss_weights=LossWeights(float(fields.get("alpha", 1.0 / 3.0)),
                                 float(fields.get("beta", 1.0 / 3.0))),
        use_variance_targets=variance,
    )


def _fmt_ccc(x: float) -> str:
    return format(x, ".6f")


def _run_sweep_cell(cfg: dict, out_dir: str, method: str, fraction: float,
                    variance: bool) -> None:
    """Train and evaluate one (method, fraction, variance) cell; cached by hash."""
    cell = _cell_name(method, fraction, variance)
    cell_dir = Path(out_dir) / "cells" / cell
    hash_file = cell_dir / "config_hash.txt"
    row_file = cell_dir / "rows.csv"
    want_hash = _config_hash(cfg, cell)
    if row_file.exists() and hash_file.exists() and hash_file.read_text().strip() == want_hash:
        return
    cell_dir.mkdir(parents=True, exist_ok=True)

    corpus = corpus_mod.load_manifest(Path(cfg["manifest"]))
    records, pooled, labels = _train_pooled(corpus)
    if method == "PCA":
        d = round_half_up(fraction * corpus.n_dims)
        frames = pca_mod.subsample_frames(
            corpus.sequences(records), seed=derive_seed(cfg["seed"], "pca", cell)
        )
        proj = pca_mod.fit_pca(frames, d)
        pca_mod.write_projection(proj, cell_dir / "projection.pcap")
        transform = lambda seq: pca_mod.apply_pca(seq, proj)
        input_dim = d
        info = {"kind": "pca", "mean": proj.mean.tolist(),
                "components": proj.components.tolist(),
                "explained_variance": proj.explained_variance.tolist()}
    else:
        scores = saliency_mod.score_saliency(pooled, labels[:, :3], method=method,
                                             bins=cfg["bins"])
        mask = saliency_mod.rank_and_select(scores, fraction)
        saliency_mod.write_saliency_report(scores, mask, cell_dir / "saliency.csv")
        saliency_mod.write_selection_mask(mask, cell_dir / "mask.txt")
        transform = lambda seq: saliency_mod.apply_mask(seq, mask)
        input_dim = len(mask.kept)
        info = {"kind": "mask", "kept": list(mask.kept), "source_dims": mask.source_dims,
                "method": mask.method, "fraction": mask.fraction}

    n_targets = 6 if variance else 3
    _, train_seqs, train_targets = _split_data(corpus, "train", transform, n_targets)
    _, valid_seqs, valid_targets = _split_data(corpus, "valid", transform, 3)
    mcfg = _model_cfg_for_cell(cfg, input_dim, variance, derive_seed(cfg["seed"], "cell", cell))
    tcfg = _train_cfg_for_cell(cfg, variance)
    trained, history = model_mod.train(
        model_mod.init_model(mcfg), train_seqs, train_targets, valid_seqs, valid_targets, tcfg
    )
    model_mod.save_checkpoint(trained, cell_dir / "checkpoint.tcgru", selection=info)
    history.write_csv(cell_dir / "history.csv")

    baseline_cfg = model_mod.ModelConfig(**{**asdict(mcfg), "input_dim": corpus.n_dims})
    baseline_bytes = 4 * model_mod.parameter_count(baseline_cfg)
    param_bytes = 4 * trained.parameter_count
    rel_reduction = 1.0 - param_bytes / baseline_bytes

    eval_records = corpus.for_split("eval")
    if not eval_records:
        raise ValueError("corpus has no eval split")
    _, eval_labels = corpus_mod.pool_corpus(corpus, eval_records)
    rows = []
    for snr in cfg["snrs_db"]:
        sequences = []
        for record in eval_records:
            seq = corpus.load_sequence(record)
            if snr is not None:
                seq = degrade_mod.perturb(
                    seq, degrade_mod.DegradeSpec(snr, seed=derive_seed(cfg["seed"], "degrade")),
                    record.id,
                )
            sequences.append(transform(seq))
        summary = model_mod.evaluate(trained, sequences, eval_labels[:, :3])
        rows.append([
            method, format(fraction, "g"), int(variance),
            "clean" if snr is None else format(snr, "g"),
            _fmt_ccc(summary.per_dim["valence"].value),
            _fmt_ccc(summary.per_dim["activation"].value),
            _fmt_ccc(summary.per_dim["dominance"].value),
            param_bytes, format(rel_reduction, ".6f"),
        ])
    with open(row_file, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerows(rows)
    hash_file.write_text(want_hash + "\n", encoding="utf-8")


def cmd_sweep(args) -> None:
    cfg = _resolve_sweep_config(Path(args.config))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_echo(out, {"command": "sweep", **cfg})
    cells = [
        (method, fraction, variance)
        for method in cfg["methods"]
        for fraction in cfg["fractions"]
        for variance in cfg["variance_targets"]
    ]
    failures = []
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = {
                pool.submit(_run_sweep_cell, cfg, str(out), m, f, v): (m, f, v)
                for (m, f, v) in cells
            }
            for future, cell in futures.items():
                try:
                    future.result()
                except Exception as exc:  # cell failures are recorded, sweep continues
                    failures.append((cell, str(exc)))
    else:
        for m, f, v in cells:
            try:
                _run_sweep_cell(cfg, str(out), m, f, v)
            except Exception as exc:
                failures.append(((m, f, v), str(exc)))

    with open(out / "results.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for m, f, v in cells:
            row_file = out / "cells" / _cell_name(m, f, v) / "rows.csv"
            if not row_file.exists():
                continue
            with open(row_file, newline="", encoding="utf-8") as rf:
                for row in csv.reader(rf):
                    writer.writerow(row)
    if failures:
        for cell, message in failures:
            print(f"cell {cell} failed: {message}", file=sys.stderr)
        raise RuntimeError(f"{len(failures)} sweep cell(s) failed")
    print(f"sweep complete: {len(cells)} cells -> {out / 'results.csv'}")


def cmd_report(args) -> None:
    sweep_dir = Path(args.sweep)
    results = sweep_dir / "results.csv"
    with open(results, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != RESULT_COLUMNS:
            raise ValueError(f"unexpected results header in {results}")
        rows = [row for row in reader if row]
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(RESULT_COLUMNS) + ["mean_ccc"])
        for row in rows:
            mean = (float(row[4]) + float(row[5]) + float(row[6])) / 3.0
            writer.writerow(row + [_fmt_ccc(mean)])
    print(f"wrote {len(rows)} rows -> {args.out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emosal",
        description="Saliency-based embedding dimension selection and TC-GRU "
                    "emotion regression experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic corpus from a JSON spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("saliency", help="score dimensions on the training split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--method", default="CCS", choices=["CCS", "MIS", "PCA", "ccs", "mis", "pca"])
    p.add_argument("--bins", type=int, default=saliency_mod.DEFAULT_MI_BINS)
    p.add_argument("--fraction", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_saliency)

    p = sub.add_parser("select", help="re-derive a mask from a saliency report")
    p.add_argument("--report", required=True)
    p.add_argument("--fraction", type=float, required=True)
    p.add_argument("--method", default="manual", choices=list(saliency_mod.MASK_METHODS))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("train", help="train the TC-GRU regressor")
    p.add_argument("--manifest")
    p.add_argument("--mask")
    p.add_argument("--projection")
    p.add_argument("--config", help="reload a train config echo instead of flags")
    p.add_argument("--out", required=True)
    p.add_argument("--conv-channels", type=int, default=16)
    p.add_argument("--gru-units", type=int, default=32)
    p.add_argument("--embedding-dim", type=int, default=16)
    p.add_argument("--conv-kernel", type=int, default=3)
    p.add_argument("--gru-layers", type=int, default=2)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--learning-rate", type=float, default=0.0005)
    p.add_argument("--max-epochs", type=int, default=50)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--alpha", type=float, default=1.0 / 3.0)
    p.add_argument("--beta", type=float, default=1.0 / 3.0)
    p.add_argument("--variance-targets", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on one split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", default="eval", choices=list(corpus_mod.SPLITS))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("degrade", help="write a noise-degraded copy of a corpus")
    p.add_argument("--manifest", required=True)
    p.add_argument("--snr-db", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("sweep", help="run a method x fraction x variance x SNR grid")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="summarize a sweep results table")
    p.add_argument("--sweep", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
