"""Embedding backends, distance metrics, and cluster merging."""

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from narramine.errors import (
    BackendUnavailable,
    DimensionMismatch,
    InvalidThreshold,
    ZeroVector,
)
from narramine.semantics import (
    FixtureEmbeddingBackend,
    cosine,
    embed,
    euclidean,
    merge_clusters,
)


def backend(table=None):
    return FixtureEmbeddingBackend(table or {"a": [1.0, 0.0], "b": [0.0, 1.0]})


# ---------------------------------------------------------------------------
# fixture backend
# ---------------------------------------------------------------------------

def test_fixture_backend_lookup_and_order():
    vecs = backend().embed(["b", "a", "b"])
    assert vecs.shape == (3, 2)
    assert vecs[0].tolist() == [0.0, 1.0]
    assert vecs[1].tolist() == [1.0, 0.0]
    assert vecs[2].tolist() == [0.0, 1.0]


def test_fixture_backend_unknown_text_is_an_error():
    with pytest.raises(BackendUnavailable):
        backend().embed(["a", "missing"])


def test_fixture_backend_rejects_mixed_dimensions_and_empty_table():
    with pytest.raises(DimensionMismatch):
        FixtureEmbeddingBackend({"a": [1.0], "b": [1.0, 2.0]})
    with pytest.raises(ValueError):
        FixtureEmbeddingBackend({})


def test_fixture_backend_from_file(tmp_path):
    path = tmp_path / "table.json"
    path.write_text(json.dumps({"x": [0.5, 0.5]}), encoding="utf-8")
    b = FixtureEmbeddingBackend.from_file(path)
    assert b.dimension == 2
    assert b.embed(["x"])[0].tolist() == [0.5, 0.5]


def test_embed_rejects_empty_inputs():
    with pytest.raises(ValueError):
        embed(backend(), [])
    with pytest.raises(ValueError):
        embed(backend(), ["a", ""])


def test_embed_rejects_nonfinite_vectors():
    with pytest.raises(ValueError):
        embed(backend({"a": [float("nan"), 0.0]}), ["a"])


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def test_euclidean_and_cosine_basics():
    assert euclidean([0.0, 0.0], [3.0, 4.0]) == 5.0
    assert cosine([1.0, 0.0], [1.0, 0.0]) == pytest.approx(1.0)
    assert cosine([1.0, 0.0], [0.0, 1.0]) == pytest.approx(0.0)
    assert cosine([1.0, 0.0], [-1.0, 0.0]) == pytest.approx(-1.0)


def test_metric_errors():
    with pytest.raises(DimensionMismatch):
        euclidean([1.0], [1.0, 2.0])
    with pytest.raises(DimensionMismatch):
        cosine([1.0], [1.0, 2.0])
    with pytest.raises(ZeroVector):
        cosine([0.0, 0.0], [1.0, 0.0])


finite = st.floats(min_value=-100.0, max_value=100.0, allow_nan=False)


@given(st.lists(finite, min_size=2, max_size=5), st.data())
def test_cosine_symmetric_and_bounded(a, data):
    b = data.draw(st.lists(finite, min_size=len(a), max_size=len(a)))
    if np.linalg.norm(a) == 0.0 or np.linalg.norm(b) == 0.0:
        return
    s = cosine(a, b)
    assert -1.0 <= s <= 1.0
    assert s == pytest.approx(cosine(b, a))


# ---------------------------------------------------------------------------
# merge_clusters
# ---------------------------------------------------------------------------

def test_merge_clusters_threshold_validation():
    with pytest.raises(InvalidThreshold):
        merge_clusters([[0]], np.eye(2), 1.5)
    with pytest.raises(InvalidThreshold):
        merge_clusters([[0]], np.eye(2), -1.5)


def test_merge_clusters_folds_similar_pair():
    # clusters 0 and 1 are nearly parallel; cluster 2 is orthogonal
    vectors = np.array([[1.0, 0.0], [0.99, 0.05], [0.0, 1.0]])
    merged, log = merge_clusters([[0], [1], [2]], vectors, threshold=0.9)
    assert merged == [[0, 1], [2]]
    assert len(log) == 1
    assert log[0][:2] == (0, 1)
    assert log[0][2] > 0.9


def test_merge_clusters_no_merge_below_threshold():
    vectors = np.eye(3)
    merged, log = merge_clusters([[0], [1], [2]], vectors, threshold=0.5)
    assert merged == [[0], [1], [2]]
    assert log == []


def test_merge_clusters_cascades_to_fixpoint():
    # all four vectors within a narrow cone: everything collapses
    vectors = np.array([[1.0, 0.0], [0.999, 0.02], [0.998, 0.04], [0.997, 0.06]])
    merged, log = merge_clusters([[0], [1], [2], [3]], vectors, threshold=0.99)
    assert merged == [[0, 1, 2, 3]]
    assert len(log) == 3


def test_merge_clusters_preserves_membership_partition():
    rng = np.random.default_rng(7)
    vectors = rng.normal(size=(10, 3))
    clusters = [[0, 1], [2, 3, 4], [5], [6, 7], [8, 9]]
    merged, _ = merge_clusters(clusters, vectors, threshold=0.3)
    flat = sorted(i for c in merged for i in c)
    assert flat == list(range(10))
    for c in merged:
        assert c == sorted(c)
