"""Feature-space noise injection at a controlled signal-to-noise ratio.

This stands in for audio-domain degradation: i.i.d. Gaussian noise is added
to an embedding matrix, scaled so that 10*log10(P_signal / P_noise) hits the
requested SNR. P_signal is the mean squared value of the matrix after
removing its grand mean; noise draws are keyed on (seed, utterance id), so
results do not depend on processing order and the same utterance perturbed at
several SNR levels receives the same noise pattern at different scales.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._validation import check_embedding_matrix
from .corpus import Corpus, UtteranceRecord, save_manifest, write_embedding_file
from .errors import DegenerateInputError
from .utils import derive_seed


@dataclass(frozen=True)
class DegradeSpec:
    snr_db: float
    seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")


def perturb(seq, spec: DegradeSpec, utterance_id: str = "") -> np.ndarray:
    """Additive Gaussian noise at the target SNR; deterministic per (seed, id)."""
    arr = check_embedding_matrix(seq)
    centered = arr - arr.mean()
    p_signal = float(np.mean(centered**2))
    if p_signal == 0.0:
        raise DegenerateInputError(
            f"utterance {utterance_id or '?'}: constant embedding has zero signal power"
        )
    p_noise = p_signal / (10.0 ** (spec.snr_db / 10.0))
    rng = np.random.default_rng(derive_seed(spec.seed, "degrade", utterance_id))
    return arr + np.sqrt(p_noise) * rng.standard_normal(arr.shape)


def degrade_corpus(corpus: Corpus, spec: DegradeSpec, out_dir) -> Corpus:
    """Write a copy of the corpus with eval-split embeddings perturbed.

    Train/valid embeddings are copied unchanged so the output is a complete,
    loadable corpus. Labels are preserved byte-for-byte; every id gains an
    ``@<snr>dB`` suffix (noise seeding uses the original id).
    """
    out_dir = Path(out_dir)
    (out_dir / "emb").mkdir(parents=True, exist_ok=True)
    suffix = f"@{spec.snr_db:g}dB"
    records: list[UtteranceRecord] = []
    for record in corpus.records:
        seq = corpus.load_sequence(record)
        if record.split == "eval":
            seq = perturb(seq, spec, record.id)
        new_id = record.id + suffix
        rel = f"emb/{new_id}.emb"
        write_embedding_file(seq, out_dir / rel)
        records.append(UtteranceRecord(new_id, record.split, rel, record.labels))
    save_manifest(records, out_dir / "manifest.txt")
    return Corpus(records=records, root=out_dir, n_dims=corpus.n_dims)
