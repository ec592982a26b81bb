import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from emosal.corpus import SyntheticSpec, generate_synthetic, pool_corpus


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    """Small planted corpus shared by unit tests: 8 dims, 3 informative."""
    spec = SyntheticSpec(
        n_utterances=60, n_dims=8, frames_range=(5, 9),
        informative_dims=(0, 3, 5), noise_scale=0.5,
        variance_profile="homoscedastic", seed=7,
    )
    return generate_synthetic(spec, tmp_path_factory.mktemp("tiny_corpus"))


def split_data(corpus, split, n_label_cols=3):
    records = corpus.for_split(split)
    sequences = [corpus.load_sequence(r) for r in records]
    _, labels = pool_corpus(corpus, records)
    return sequences, labels[:, :n_label_cols]
