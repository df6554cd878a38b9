import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from embedtune import (
    EmbeddingSet,
    LabelSets,
    load_embeddings,
    load_labels,
    normalize_rows,
    write_embeddings,
    write_labels,
)
from embedtune.datamodel import EMB1_MAGIC, EMB1_VERSION
from embedtune.errors import (
    MalformedHeader,
    NonFiniteValue,
    TruncatedPayload,
    ZeroNormRow,
)


def _write_raw(path, magic=EMB1_MAGIC, version=EMB1_VERSION, rows=0, dim=0,
               payload=b""):
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIII", magic, version, rows, dim))
        fh.write(payload)


def test_header_round_trip(tmp_path):
    path = tmp_path / "small.emb"
    values = np.arange(6, dtype=np.float32).reshape(2, 3)
    write_embeddings(EmbeddingSet(values), path)
    loaded = load_embeddings(path)
    assert loaded.count == 2 and loaded.dim == 3
    assert np.array_equal(loaded.data, values)


def test_truncated_payload(tmp_path):
    path = tmp_path / "trunc.emb"
    payload = np.zeros(5 * 3, dtype="<f4").tobytes()
    _write_raw(path, rows=10, dim=3, payload=payload)
    with pytest.raises(TruncatedPayload):
        load_embeddings(path)


def test_bad_magic_and_version(tmp_path):
    path = tmp_path / "bad.emb"
    _write_raw(path, magic=b"NOPE")
    with pytest.raises(MalformedHeader):
        load_embeddings(path)
    _write_raw(path, version=7)
    with pytest.raises(MalformedHeader):
        load_embeddings(path)


def test_nonfinite_payload_rejected(tmp_path):
    path = tmp_path / "nan.emb"
    payload = np.array([1.0, np.nan], dtype="<f4").tobytes()
    _write_raw(path, rows=1, dim=2, payload=payload)
    with pytest.raises(NonFiniteValue):
        load_embeddings(path)


def test_empty_set_round_trip(tmp_path):
    path = tmp_path / "empty.emb"
    write_embeddings(EmbeddingSet(np.zeros((0, 4), dtype=np.float32)), path)
    loaded = load_embeddings(path)
    assert loaded.count == 0 and loaded.dim == 4
    assert path.stat().st_size == 16  # header only


def test_single_value_payload_is_ieee754(tmp_path):
    path = tmp_path / "one.emb"
    write_embeddings(EmbeddingSet(np.array([[0.5]], dtype=np.float32)), path)
    raw = path.read_bytes()
    assert raw[16:] == struct.pack("<f", 0.5)


def test_round_trip_100x32_bit_exact(tmp_path):
    rng = np.random.default_rng(42)
    data = rng.standard_normal((100, 32)).astype(np.float32)
    path = tmp_path / "rt.emb"
    write_embeddings(EmbeddingSet(data), path)
    loaded = load_embeddings(path)
    # oracle: every entry compared bit-exactly via raw byte views
    assert loaded.data.tobytes() == data.tobytes()


@settings(max_examples=50, deadline=None)
@given(
    rows=st.integers(0, 20),
    dim=st.integers(1, 8),
    seed=st.integers(0, 10_000),
)
def test_round_trip_property(tmp_path_factory, rows, dim, seed):
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((rows, dim)).astype(np.float32)
    path = tmp_path_factory.mktemp("rt") / "p.emb"
    write_embeddings(EmbeddingSet(data), path)
    assert np.array_equal(load_embeddings(path).data, data)


def test_normalize_three_four_five():
    out = normalize_rows(EmbeddingSet(np.array([[3.0, 4.0]], dtype=np.float32)))
    assert np.allclose(out.data, [[0.6, 0.8]])
    assert out.normalized


def test_normalize_idempotent():
    rng = np.random.default_rng(1)
    once = normalize_rows(EmbeddingSet(rng.standard_normal((20, 5)).astype(np.float32)))
    twice = normalize_rows(once)
    assert np.max(np.abs(twice.data - once.data)) < 1e-7


def test_normalize_zero_row():
    data = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=np.float32)
    with pytest.raises(ZeroNormRow) as err:
        normalize_rows(EmbeddingSet(data))
    assert err.value.index == 1


def test_labels_round_trip_with_blanks(tmp_path):
    path = tmp_path / "l.txt"
    labels = np.array([3, -1, 0], dtype=np.int64)
    write_labels(labels, path)
    assert np.array_equal(load_labels(path, expected_rows=3), labels)


def test_label_sets_validation():
    good = LabelSets(
        labelled=[(0, 1)],
        cluster_pseudo=[(1, 1)],
        confident=[(1, 1), (2, 0)],
        weak=[(3, np.array([1, 1], dtype=np.int8))],
    )
    good.validate()

    overlapping = LabelSets(labelled=[(0, 1)], confident=[(0, 1)])
    with pytest.raises(ValueError):
        overlapping.validate()

    not_subset = LabelSets(cluster_pseudo=[(5, 1)], confident=[(2, 0)])
    with pytest.raises(ValueError):
        not_subset.validate()

    empty_mask = LabelSets(weak=[(1, np.zeros(3, dtype=np.int8))])
    with pytest.raises(ValueError):
        empty_mask.validate()
