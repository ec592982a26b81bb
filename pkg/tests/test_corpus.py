import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from emosal.corpus import (
    AffectLabels,
    SyntheticSpec,
    UtteranceRecord,
    generate_synthetic,
    load_manifest,
    mean_pool,
    pool_corpus,
    read_embedding_file,
    save_manifest,
    write_embedding_file,
)
from emosal.errors import FormatError, ManifestError


def test_emb1_single_value_layout(tmp_path):
    path = tmp_path / "one.emb"
    write_embedding_file([[2.0]], path)
    expected = b"EMB1" + bytes([1, 0, 0, 0]) + bytes([1, 0, 0, 0]) + bytes([0, 0, 0, 0x40])
    assert path.read_bytes() == expected


def test_emb1_zero_matrix_layout(tmp_path):
    path = tmp_path / "zeros.emb"
    write_embedding_file(np.zeros((2, 3)), path)
    raw = path.read_bytes()
    assert raw[:4] == b"EMB1"
    assert raw[4:12] == bytes([2, 0, 0, 0, 3, 0, 0, 0])
    assert raw[12:] == b"\x00" * 24


@settings(max_examples=60, deadline=None)
@given(
    rows=st.integers(1, 12),
    cols=st.integers(1, 9),
    seed=st.integers(0, 2**32 - 1),
)
def test_emb1_roundtrip(tmp_path_factory, rows, cols, seed):
    path = tmp_path_factory.mktemp("rt") / "m.emb"
    mat = np.random.default_rng(seed).normal(scale=10.0, size=(rows, cols))
    write_embedding_file(mat, path)
    back = read_embedding_file(path)
    assert back.shape == (rows, cols)
    np.testing.assert_array_equal(back, mat.astype(np.float32).astype(np.float64))


def test_read_bad_magic(tmp_path):
    path = tmp_path / "bad.emb"
    path.write_bytes(b"XXXX" + bytes(8) + bytes(4))
    with pytest.raises(FormatError, match="magic"):
        read_embedding_file(path)


def test_read_truncated_payload(tmp_path):
    path = tmp_path / "short.emb"
    write_embedding_file(np.ones((2, 2)), path)
    path.write_bytes(path.read_bytes()[:-4])  # drop one of four floats
    with pytest.raises(FormatError, match="expected 16 payload bytes"):
        read_embedding_file(path)


def test_read_nonfinite_names_cell(tmp_path):
    path = tmp_path / "inf.emb"
    raw = b"EMB1" + bytes([1, 0, 0, 0, 2, 0, 0, 0])
    raw += np.array([1.0, np.inf], dtype="<f4").tobytes()
    path.write_bytes(raw)
    with pytest.raises(FormatError, match="row 0, col 1"):
        read_embedding_file(path)


def test_write_rejects_invalid():
    with pytest.raises(ValueError):
        write_embedding_file(np.zeros((0, 3)), "/dev/null")
    with pytest.raises(ValueError):
        write_embedding_file([[np.nan]], "/dev/null")


def test_mean_pool_examples():
    np.testing.assert_allclose(mean_pool([[1.0, 2.0], [3.0, 4.0]]), [2.0, 3.0])
    frame = np.array([[0.5, -1.5, 2.0]])
    np.testing.assert_array_equal(mean_pool(frame), frame[0])


def test_mean_pool_matches_bruteforce(rng):
    mat = rng.normal(size=(50, 8))
    pooled = mean_pool(mat)
    for k in range(8):
        expected = math.fsum(mat[:, k]) / 50
        assert abs(pooled[k] - expected) <= 1e-12 * max(1.0, abs(expected))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_mean_pool_linear(seed, a, b):
    gen = np.random.default_rng(seed)
    x = gen.normal(size=(6, 4))
    y = gen.normal(size=(6, 4))
    lhs = mean_pool(a * x + b * y)
    rhs = a * mean_pool(x) + b * mean_pool(y)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def _write_corpus(tmp_path, records_data, n_dims=4):
    records = []
    for i, (uid, split, mean, var) in enumerate(records_data):
        rel = f"{uid}.emb"
        write_embedding_file(np.full((2 + i, n_dims), float(i)), tmp_path / rel)
        records.append(UtteranceRecord(uid, split, rel, AffectLabels(mean, var)))
    save_manifest(records, tmp_path / "manifest.txt")
    return tmp_path / "manifest.txt"


def test_manifest_roundtrip(tmp_path):
    manifest = _write_corpus(tmp_path, [
        ("a", "train", (4.0, 3.5, 2.0), (0.2, 0.1, 0.0)),
        ("b", "eval", (1.0, 7.0, 4.4), (0.0, 0.0, 0.3)),
    ])
    corpus = load_manifest(manifest)
    assert len(corpus.records) == 2
    assert corpus.n_dims == 4
    assert [r.id for r in corpus.for_split("train")] == ["a"]
    assert corpus.records[1].labels.mean == (1.0, 7.0, 4.4)


def test_manifest_duplicate_id(tmp_path):
    manifest = _write_corpus(tmp_path, [("a", "train", (4, 4, 4), (0, 0, 0))])
    line = manifest.read_text()
    manifest.write_text(line + line)
    with pytest.raises(ManifestError, match="duplicate id"):
        load_manifest(manifest)


def test_manifest_label_out_of_range(tmp_path):
    with pytest.raises(ManifestError, match="mean_v=8.0"):
        _write_corpus(tmp_path, [("a", "train", (8.0, 4, 4), (0, 0, 0))])


def test_manifest_negative_variance(tmp_path):
    with pytest.raises(ManifestError, match="var_a"):
        _write_corpus(tmp_path, [("a", "train", (4, 4, 4), (0, -0.5, 0))])


def test_manifest_bad_split(tmp_path):
    with pytest.raises(ManifestError, match="split"):
        _write_corpus(tmp_path, [("a", "test", (4, 4, 4), (0, 0, 0))])


def test_manifest_inconsistent_cols(tmp_path):
    manifest = _write_corpus(tmp_path, [
        ("a", "train", (4, 4, 4), (0, 0, 0)),
        ("b", "train", (4, 4, 4), (0, 0, 0)),
    ])
    write_embedding_file(np.zeros((3, 9)), tmp_path / "b.emb")
    with pytest.raises(ManifestError, match="record b.*9 dims"):
        load_manifest(manifest)


def test_manifest_missing_file(tmp_path):
    manifest = _write_corpus(tmp_path, [("a", "train", (4, 4, 4), (0, 0, 0))])
    (tmp_path / "a.emb").unlink()
    with pytest.raises(ManifestError, match="does not exist"):
        load_manifest(manifest)


def test_manifest_variance_defaults_to_zero(tmp_path):
    manifest = _write_corpus(tmp_path, [("a", "train", (4, 4, 4), (0, 0, 0))])
    line = manifest.read_text().split()
    kept = [tok for tok in line if not tok.startswith("var_")]
    manifest.write_text(" ".join(kept) + "\n")
    corpus = load_manifest(manifest)
    assert corpus.records[0].labels.variance == (0.0, 0.0, 0.0)


def test_pool_corpus_alignment(tmp_path):
    manifest = _write_corpus(tmp_path, [
        ("a", "train", (4, 4, 4), (0, 0, 0)),
        ("b", "train", (3, 3, 3), (0, 0, 0)),
        ("c", "eval", (2, 2, 2), (0, 0, 0)),
    ])
    corpus = load_manifest(manifest)
    pooled, labels = pool_corpus(corpus)
    assert pooled.shape == (3, 4)
    np.testing.assert_array_equal(labels[:, 0], [4, 3, 2])
    # permuting the record list permutes rows identically
    perm = [corpus.records[i] for i in (2, 0, 1)]
    pooled_p, labels_p = pool_corpus(corpus, perm)
    np.testing.assert_array_equal(pooled_p, pooled[[2, 0, 1]])
    np.testing.assert_array_equal(labels_p, labels[[2, 0, 1]])


def test_pool_corpus_single(tmp_path):
    manifest = _write_corpus(tmp_path, [("a", "train", (4, 4, 4), (0, 0, 0))])
    corpus = load_manifest(manifest)
    pooled, _ = pool_corpus(corpus)
    np.testing.assert_allclose(pooled[0], mean_pool(corpus.load_sequence(corpus.records[0])))


def test_pool_corpus_recompute_oracle(tiny_corpus):
    pooled, labels = pool_corpus(tiny_corpus)
    for i, record in enumerate(tiny_corpus.records):
        seq = tiny_corpus.load_sequence(record)
        expected = [math.fsum(seq[:, k]) / seq.shape[0] for k in range(seq.shape[1])]
        np.testing.assert_allclose(pooled[i], expected, rtol=1e-12, atol=1e-12)
        np.testing.assert_array_equal(labels[i, :3], record.labels.mean)


def test_pool_corpus_empty(tiny_corpus):
    with pytest.raises(ValueError, match="empty"):
        pool_corpus(tiny_corpus, [])


def _tree_bytes(root):
    return {
        p.relative_to(root): p.read_bytes()
        for p in sorted(root.rglob("*")) if p.is_file()
    }


def test_generate_deterministic(tmp_path):
    spec = SyntheticSpec(20, 6, (3, 5), (1, 4), 0.5, "heteroscedastic", seed=7)
    a = generate_synthetic(spec, tmp_path / "a")
    b = generate_synthetic(spec, tmp_path / "b")
    assert _tree_bytes(tmp_path / "a") == _tree_bytes(tmp_path / "b")
    assert [r.id for r in a.records] == [r.id for r in b.records]


def test_generate_seed_changes_output(tmp_path):
    base = SyntheticSpec(10, 4, (3, 4), (0,), 0.5, seed=1)
    generate_synthetic(base, tmp_path / "a")
    generate_synthetic(SyntheticSpec(10, 4, (3, 4), (0,), 0.5, seed=2), tmp_path / "b")
    assert _tree_bytes(tmp_path / "a") != _tree_bytes(tmp_path / "b")


def test_generate_validates_spec(tmp_path):
    with pytest.raises(ValueError, match="out of range"):
        generate_synthetic(SyntheticSpec(5, 4, (3, 4), (7,), 0.5), tmp_path)
    with pytest.raises(ValueError, match="frames_range"):
        generate_synthetic(SyntheticSpec(5, 4, (5, 3), (), 0.5), tmp_path)


def test_generate_pure_noise_has_no_correlation(tmp_path):
    spec = SyntheticSpec(500, 16, (4, 8), (), 0.5, seed=99)
    corpus = generate_synthetic(spec, tmp_path)
    pooled, labels = pool_corpus(corpus)
    centered = pooled - pooled.mean(axis=0)
    lab = labels[:, :3] - labels[:, :3].mean(axis=0)
    corr = np.abs(centered.T @ lab) / (
        np.linalg.norm(centered, axis=0)[:, None] * np.linalg.norm(lab, axis=0)
    )
    assert corr.max() < 0.2


def test_generate_informative_dims_stronger(tmp_path):
    spec = SyntheticSpec(500, 64, (4, 8), tuple(range(0, 64, 4)), 0.5, seed=3)
    corpus = generate_synthetic(spec, tmp_path)
    pooled, labels = pool_corpus(corpus)
    centered = pooled - pooled.mean(axis=0)
    lab = labels[:, :3] - labels[:, :3].mean(axis=0)
    corr = np.abs(centered.T @ lab) / (
        np.linalg.norm(centered, axis=0)[:, None] * np.linalg.norm(lab, axis=0)
    )
    strength = corr.mean(axis=1)
    informative = np.zeros(64, dtype=bool)
    informative[list(spec.informative_dims)] = True
    assert strength[informative].mean() > strength[~informative].mean()


def test_generate_label_ranges(tmp_path):
    spec = SyntheticSpec(80, 4, (2, 3), (0, 1), 0.5, "heteroscedastic", seed=11)
    corpus = generate_synthetic(spec, tmp_path)
    for record in corpus.records:
        assert all(1.0 <= m <= 7.0 for m in record.labels.mean)
        assert all(v >= 0 for v in record.labels.variance)
