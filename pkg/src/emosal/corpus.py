"""On-disk corpus format, loading/validation, pooling, and synthetic data.

A corpus is a manifest text file plus one binary embedding file per
utterance. The embedding file layout ("EMB1") is bit-exact:

    bytes 0..3   magic ``EMB1``
    bytes 4..7   frame count M, uint32 little-endian
    bytes 8..11  dimension count N, uint32 little-endian
    bytes 12..   M*N IEEE-754 binary32 little-endian values, row-major

The manifest is UTF-8, one utterance per line, space-separated
``key=value`` tokens with field names ``id``, ``split``,
``embedding_path``, ``mean_v``, ``mean_a``, ``mean_d``, ``var_v``,
``var_a``, ``var_d``. ``embedding_path`` is resolved relative to the
manifest's directory. Variance fields may be omitted and default to 0.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import check_embedding_matrix
from .errors import FormatError, ManifestError
from .utils import derive_seed

EMB1_MAGIC = b"EMB1"
SPLITS = ("train", "valid", "eval")
LIKERT_MIN, LIKERT_MAX = 1.0, 7.0

# Column order of every label matrix in the package.
LABEL_COLUMNS = ("mean_v", "mean_a", "mean_d", "var_v", "var_a", "var_d")
MANIFEST_FIELDS = ("id", "split", "embedding_path") + LABEL_COLUMNS


def write_embedding_file(values, dest) -> None:
    """Write a frame-by-dimension matrix in the EMB1 layout (see module doc)."""
    arr = check_embedding_matrix(values)
    rows, cols = arr.shape
    payload = arr.astype("<f4").tobytes(order="C")
    try:
        with open(dest, "wb") as fh:
            fh.write(EMB1_MAGIC)
            fh.write(struct.pack("<II", rows, cols))
            fh.write(payload)
    except OSError as exc:
        raise OSError(f"cannot write embedding file {dest}: {exc}") from exc


def read_embedding_header(src) -> tuple[int, int]:
    """Read only (rows, cols) from an EMB1 file; cheap consistency checks."""
    with open(src, "rb") as fh:
        head = fh.read(12)
    if len(head) < 4 or head[:4] != EMB1_MAGIC:
        raise FormatError(f"{src}: bad magic {head[:4]!r} at offset 0, expected {EMB1_MAGIC!r}")
    if len(head) < 12:
        raise FormatError(f"{src}: truncated header, {len(head)} of 12 bytes present")
    rows, cols = struct.unpack("<II", head[4:12])
    if rows < 1 or cols < 1:
        raise FormatError(f"{src}: invalid shape {rows}x{cols} in header")
    return rows, cols


def read_embedding_file(src) -> np.ndarray:
    """Inverse of :func:`write_embedding_file`; validates magic, size, finiteness."""
    rows, cols = read_embedding_header(src)
    with open(src, "rb") as fh:
        fh.seek(12)
        payload = fh.read()
    expected = rows * cols * 4
    if len(payload) != expected:
        raise FormatError(
            f"{src}: expected {expected} payload bytes at offset 12, found {len(payload)}"
        )
    arr = np.frombuffer(payload, dtype="<f4").reshape(rows, cols).astype(np.float64)
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise FormatError(f"{src}: non-finite value at row {bad[0]}, col {bad[1]}")
    return arr


@dataclass(frozen=True)
class AffectLabels:
    """Mean and grader-variance Likert labels, ordered (valence, activation, dominance)."""

    mean: tuple[float, float, float]
    variance: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def validate(self, record_id: str = "?") -> None:
        for name, m in zip(("mean_v", "mean_a", "mean_d"), self.mean):
            if not np.isfinite(m) or not (LIKERT_MIN <= m <= LIKERT_MAX):
                raise ManifestError(
                    f"record {record_id}: {name}={m} outside Likert range "
                    f"[{LIKERT_MIN:g}, {LIKERT_MAX:g}]"
                )
        for name, v in zip(("var_v", "var_a", "var_d"), self.variance):
            if not np.isfinite(v) or v < 0.0:
                raise ManifestError(f"record {record_id}: {name}={v} must be finite and >= 0")

    def as_row(self) -> np.ndarray:
        return np.array(self.mean + self.variance, dtype=np.float64)


@dataclass(frozen=True)
class UtteranceRecord:
    id: str
    split: str
    embedding_path: str
    labels: AffectLabels

    def validate(self) -> None:
        if not self.id or any(c.isspace() for c in self.id):
            raise ManifestError(f"record id {self.id!r} must be non-empty without whitespace")
        if self.split not in SPLITS:
            raise ManifestError(f"record {self.id}: split {self.split!r} not in {SPLITS}")
        self.labels.validate(self.id)


@dataclass
class Corpus:
    """Validated set of utterance records plus the directory paths resolve against."""

    records: list[UtteranceRecord]
    root: Path
    n_dims: int

    def for_split(self, split: str) -> list[UtteranceRecord]:
        if split not in SPLITS:
            raise ValueError(f"unknown split {split!r}")
        return [r for r in self.records if r.split == split]

    def load_sequence(self, record: UtteranceRecord) -> np.ndarray:
        return read_embedding_file(self.root / record.embedding_path)

    def sequences(self, records: list[UtteranceRecord] | None = None) -> list[np.ndarray]:
        return [self.load_sequence(r) for r in (self.records if records is None else records)]


def _format_float(x: float) -> str:
    return repr(float(x))


def format_manifest_line(record: UtteranceRecord) -> str:
    vals = record.labels.as_row()
    parts = [f"id={record.id}", f"split={record.split}", f"embedding_path={record.embedding_path}"]
    parts += [f"{name}={_format_float(v)}" for name, v in zip(LABEL_COLUMNS, vals)]
    return " ".join(parts)


def parse_manifest_line(line: str, lineno: int) -> UtteranceRecord:
    fields: dict[str, str] = {}
    for token in line.split():
        if "=" not in token:
            raise ManifestError(f"manifest line {lineno}: token {token!r} is not key=value")
        key, value = token.split("=", 1)
        if key in fields:
            raise ManifestError(f"manifest line {lineno}: duplicate field {key!r}")
        fields[key] = value
    for key in ("id", "split", "embedding_path", "mean_v", "mean_a", "mean_d"):
        if key not in fields:
            raise ManifestError(f"manifest line {lineno}: missing field {key!r}")
    unknown = set(fields) - set(MANIFEST_FIELDS)
    if unknown:
        raise ManifestError(f"manifest line {lineno}: unknown fields {sorted(unknown)}")

    def num(key: str, default: float | None = None) -> float:
        if key not in fields:
            return float(default)
        try:
            return float(fields[key])
        except ValueError as exc:
            raise ManifestError(f"manifest line {lineno}: field {key}={fields[key]!r} "
                                f"is not a number") from exc

    labels = AffectLabels(
        mean=(num("mean_v"), num("mean_a"), num("mean_d")),
        variance=(num("var_v", 0.0), num("var_a", 0.0), num("var_d", 0.0)),
    )
    return UtteranceRecord(fields["id"], fields["split"], fields["embedding_path"], labels)


def save_manifest(records: list[UtteranceRecord], path) -> None:
    text = "".join(format_manifest_line(r) + "\n" for r in records)
    Path(path).write_text(text, encoding="utf-8")


def load_manifest(path) -> Corpus:
    """Load and fully validate a manifest; see module doc for the format.

    Validation covers label ranges, unique ids, split tags, existence of
    every referenced embedding file, and a shared dimension count.
    """
    path = Path(path)
    root = path.parent
    records: list[UtteranceRecord] = []
    seen: set[str] = set()
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        record = parse_manifest_line(line, lineno)
        record.validate()
        if record.id in seen:
            raise ManifestError(f"record {record.id}: duplicate id (line {lineno})")
        seen.add(record.id)
        records.append(record)
    if not records:
        raise ManifestError(f"manifest {path} contains no records")

    n_dims = None
    for record in records:
        file = root / record.embedding_path
        if not file.is_file():
            raise ManifestError(f"record {record.id}: embedding file {file} does not exist")
        _, cols = read_embedding_header(file)
        if n_dims is None:
            n_dims = cols
        elif cols != n_dims:
            raise ManifestError(
                f"record {record.id}: embedding has {cols} dims, corpus uses {n_dims}"
            )
    return Corpus(records=records, root=root, n_dims=int(n_dims))


def mean_pool(seq) -> np.ndarray:
    """Mean over frames: component k is the average of column k."""
    arr = check_embedding_matrix(seq)
    return arr.mean(axis=0)


def pool_corpus(
    corpus: Corpus, records: list[UtteranceRecord] | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Mean-pool every utterance; rows follow the record order.

    Returns ``(pooled, labels)`` where ``pooled`` is (n, N) and ``labels``
    is (n, 6) with columns :data:`LABEL_COLUMNS`.
    """
    recs = corpus.records if records is None else records
    if not recs:
        raise ValueError("cannot pool an empty corpus")
    pooled = np.empty((len(recs), corpus.n_dims), dtype=np.float64)
    labels = np.empty((len(recs), 6), dtype=np.float64)
    for i, record in enumerate(recs):
        pooled[i] = mean_pool(corpus.load_sequence(record))
        labels[i] = record.labels.as_row()
    return pooled, labels


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a synthetic corpus with planted salient dimensions.

    Each utterance draws a latent standard-normal triple z; label means are
    clamp(4 + 1.2 z, 1, 7). Informative dimensions carry a fixed unit-norm
    random mix of z (constant across frames) plus per-frame Gaussian noise of
    scale ``noise_scale``; the other dimensions are unit Gaussian noise.
    The heteroscedastic profile makes grader variance grow with \\|z_v\\| and
    jitters the stored means by noise proportional to that variance; the
    homoscedastic profile stores variance 0.25 and exact clamped means.
    """

    n_utterances: int
    n_dims: int
    frames_range: tuple[int, int]
    informative_dims: tuple[int, ...]
    noise_scale: float
    variance_profile: str = "homoscedastic"
    seed: int = 0

    def validate(self) -> None:
        if self.n_utterances < 1:
            raise ValueError("n_utterances must be positive")
        if self.n_dims < 1:
            raise ValueError("n_dims must be positive")
        lo, hi = self.frames_range
        if not (1 <= lo <= hi):
            raise ValueError(f"frames_range must satisfy 1 <= min <= max, got {self.frames_range}")
        for k in self.informative_dims:
            if not (0 <= k < self.n_dims):
                raise ValueError(f"informative dim {k} out of range [0, {self.n_dims})")
        if len(set(self.informative_dims)) != len(self.informative_dims):
            raise ValueError("informative_dims contains duplicates")
        if self.noise_scale <= 0:
            raise ValueError("noise_scale must be positive")
        if self.variance_profile not in ("homoscedastic", "heteroscedastic"):
            raise ValueError(f"unknown variance_profile {self.variance_profile!r}")


# Split proportions for generated corpora; blocks of consecutive indices so
# that regeneration with the same spec is trivially reproducible.
_SPLIT_FRACTIONS = (("train", 0.70), ("valid", 0.15), ("eval", 0.15))
_HET_VAR_BASE, _HET_VAR_SLOPE = 0.1, 0.4
_HET_LABEL_NOISE = 0.5  # std of label jitter, per unit of grader variance


def _split_assignment(n: int) -> list[str]:
    n_train = max(1, round(n * _SPLIT_FRACTIONS[0][1]))
    n_valid = max(1, round(n * _SPLIT_FRACTIONS[1][1])) if n >= 2 else 0
    n_eval = n - n_train - n_valid
    if n_eval < 1 and n >= 3:
        n_train -= 1
        n_eval += 1
    splits = ["train"] * n_train + ["valid"] * n_valid + ["eval"] * max(0, n_eval)
    return splits[:n]


def generate_synthetic(spec: SyntheticSpec, out_dir) -> Corpus:
    """Write a synthetic corpus (EMB1 files + manifest) under ``out_dir``.

    Deterministic for a given spec: reruns are byte-identical.
    """
    spec.validate()
    out_dir = Path(out_dir)
    emb_dir = out_dir / "emb"
    emb_dir.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(derive_seed(spec.seed, "synthetic"))
    n, n_dims = spec.n_utterances, spec.n_dims
    informative = np.array(sorted(spec.informative_dims), dtype=np.intp)
    other = np.setdiff1d(np.arange(n_dims), informative)

    # Fixed draw order: latents, mixes, label jitter, frame counts, then frames.
    z = rng.standard_normal((n, 3))
    if informative.size:
        mix = rng.standard_normal((informative.size, 3))
        mix /= np.linalg.norm(mix, axis=1, keepdims=True)
    else:
        mix = np.zeros((0, 3))
    clean_means = np.clip(4.0 + 1.2 * z, LIKERT_MIN, LIKERT_MAX)
    if spec.variance_profile == "heteroscedastic":
        variances = _HET_VAR_BASE + _HET_VAR_SLOPE * np.abs(z[:, :1])  # (n, 1)
        variances = np.repeat(variances, 3, axis=1)
        jitter = rng.standard_normal((n, 3)) * (_HET_LABEL_NOISE * variances)
        means = np.clip(4.0 + 1.2 * z + jitter, LIKERT_MIN, LIKERT_MAX)
    else:
        variances = np.full((n, 3), 0.25)
        means = clean_means
    lo, hi = spec.frames_range
    frame_counts = rng.integers(lo, hi + 1, size=n)

    splits = _split_assignment(n)
    width = max(5, len(str(n - 1)))
    records: list[UtteranceRecord] = []
    for i in range(n):
        m = int(frame_counts[i])
        frames = np.empty((m, n_dims))
        frames[:, other] = rng.standard_normal((m, other.size))
        if informative.size:
            signal = mix @ z[i]  # one value per informative dim
            frames[:, informative] = signal + spec.noise_scale * rng.standard_normal(
                (m, informative.size)
            )
        uid = f"utt{i:0{width}d}"
        rel = f"emb/{uid}.emb"
        write_embedding_file(frames, out_dir / rel)
        labels = AffectLabels(mean=tuple(means[i]), variance=tuple(variances[i]))
        records.append(UtteranceRecord(uid, splits[i], rel, labels))

    save_manifest(records, out_dir / "manifest.txt")
    return Corpus(records=records, root=out_dir, n_dims=n_dims)
