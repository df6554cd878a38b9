import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from embedtune import (
    ClusterAlgo,
    EmbeddingSet,
    FilterStrategy,
    SamplerConfig,
    kmeans,
    kmeans_best,
    quantile_filter,
    random_labelled_set,
    sample_labelled_set,
    select_medoids,
)
from embedtune.datamodel import ProbMatrix
from embedtune.errors import NotEnoughPoints, TooFewSamples

from conftest import unit_rows


def filter_oracle(conf, q, strategy):
    """Sort-and-slice re-derivation with plain python lists."""
    m = len(conf)
    order = sorted(range(m), key=lambda i: (-conf[i], i))
    hi, lo = m // q, (q - 1) * m // q
    if strategy is FilterStrategy.REMOVE_BOTH:
        kept = order[hi:lo]
    elif strategy is FilterStrategy.REMOVE_LOW_ONLY:
        kept = order[:lo]
    elif strategy is FilterStrategy.REMOVE_HIGH_ONLY:
        kept = order[hi:]
    elif strategy is FilterStrategy.KEEP_HIGH_ONLY:
        kept = order[:hi]
    elif strategy is FilterStrategy.KEEP_LOW_ONLY:
        kept = order[lo:]
    else:
        kept = list(range(m))
    return sorted(kept)


def test_remove_both_m10_q5():
    conf = np.linspace(0.9, 0.1, 10)  # descending, so sorted order = index order
    cfg = SamplerConfig(budget=1, quantiles=5)
    kept = quantile_filter(conf, cfg)
    # drops indices 0,1 (top) and 8,9 (bottom)
    assert np.array_equal(kept, np.arange(2, 8))


def test_filter_against_oracle_all_strategies():
    rng = np.random.default_rng(13)
    conf = rng.uniform(size=103)
    for strategy in FilterStrategy:
        cfg = SamplerConfig(budget=1, quantiles=5, strategy=strategy)
        kept = quantile_filter(conf, cfg)
        assert list(kept) == filter_oracle(list(conf), 5, strategy)


def test_filter_tie_handling_matches_oracle():
    conf = np.array([0.5, 0.5, 0.9, 0.5, 0.1, 0.5, 0.5, 0.5, 0.5, 0.5])
    cfg = SamplerConfig(budget=1, quantiles=5)
    assert list(quantile_filter(conf, cfg)) == filter_oracle(
        list(conf), 5, FilterStrategy.REMOVE_BOTH
    )


@settings(max_examples=40, deadline=None)
@given(m=st.integers(10, 120), seed=st.integers(0, 10_000))
def test_remove_both_retains_middle_quantiles(m, seed):
    rng = np.random.default_rng(seed)
    conf = rng.uniform(size=m)
    cfg = SamplerConfig(budget=1, quantiles=5)
    kept = quantile_filter(conf, cfg)
    assert kept.shape[0] == (4 * m) // 5 - m // 5
    assert list(kept) == filter_oracle(list(conf), 5, FilterStrategy.REMOVE_BOTH)


def test_filter_rejects_fewer_samples_than_quantiles():
    with pytest.raises(TooFewSamples):
        quantile_filter(np.ones(3), SamplerConfig(budget=1, quantiles=5))


def test_no_filter_keeps_everything():
    cfg = SamplerConfig(budget=1, strategy=FilterStrategy.NO_FILTER)
    assert np.array_equal(quantile_filter(np.ones(4), cfg), np.arange(4))


def _blobs(rng, centers, per, spread):
    points = np.concatenate(
        [c + spread * rng.standard_normal((per, centers.shape[1])) for c in centers]
    )
    return EmbeddingSet(points.astype(np.float32))


def test_kmeans_recovers_separated_blobs():
    rng = np.random.default_rng(0)
    centers = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
    samples = _blobs(rng, centers, 30, 0.2)
    for algo in ClusterAlgo:
        result = kmeans(samples, 3, SamplerConfig(budget=3, cluster_algo=algo, seed=4))
        # every blob lands in exactly one cluster
        groups = [set(result.assignments[i * 30:(i + 1) * 30]) for i in range(3)]
        assert all(len(g) == 1 for g in groups)
        assert len(set.union(*groups)) == 3


def test_kmeans_inertia_non_increasing():
    rng = np.random.default_rng(2)
    samples = EmbeddingSet(rng.standard_normal((200, 8)).astype(np.float32))
    for algo in ClusterAlgo:
        result = kmeans(samples, 6, SamplerConfig(budget=6, cluster_algo=algo, seed=9))
        trace = result.inertia_trace
        assert all(b <= a + 1e-9 for a, b in zip(trace, trace[1:]))


def test_kmeans_k_equals_n():
    rng = np.random.default_rng(3)
    samples = EmbeddingSet(unit_rows(rng, 7, 4))
    result = kmeans(samples, 7, SamplerConfig(budget=7))
    assert sorted(result.assignments) == list(range(7))
    assert np.allclose(
        result.centroids[result.assignments], samples.data.astype(np.float64)
    )


def test_kmeans_deterministic_and_k_mismatch():
    rng = np.random.default_rng(6)
    samples = EmbeddingSet(rng.standard_normal((40, 3)).astype(np.float32))
    a = kmeans(samples, 4, SamplerConfig(budget=4, seed=1))
    b = kmeans(samples, 4, SamplerConfig(budget=4, seed=1))
    assert np.array_equal(a.assignments, b.assignments)
    assert np.array_equal(a.centroids, b.centroids)
    with pytest.raises(NotEnoughPoints):
        kmeans(samples, 41, SamplerConfig(budget=41))


def test_medoid_oracle_and_tie():
    points = np.array(
        [[0.0, 0.0], [1.0, 0.0], [0.9, 0.1], [5.0, 5.0]], dtype=np.float32
    )
    samples = EmbeddingSet(points)
    result = kmeans(samples, 2, SamplerConfig(budget=2, seed=0))
    medoids = select_medoids(samples, result)
    # brute-force medoid per cluster
    for j in range(2):
        members = np.where(result.assignments == j)[0]
        d2 = [
            float(np.sum((points[i].astype(np.float64) - result.centroids[j]) ** 2))
            for i in members
        ]
        assert medoids[j] == members[int(np.argmin(d2))]

    # exact tie: two members equidistant from the centroid, lower index wins
    from embedtune.sampler import ClusterResult

    tied = EmbeddingSet(np.array([[1.0, 0.0], [-1.0, 0.0]], dtype=np.float32))
    res = ClusterResult(
        assignments=np.zeros(2, dtype=np.int64),
        centroids=np.zeros((1, 2), dtype=np.float64),
        inertia_trace=[2.0],
    )
    assert select_medoids(tied, res)[0] == 0


def test_kmeans_best_never_worse_than_single_run():
    rng = np.random.default_rng(8)
    samples = EmbeddingSet(rng.standard_normal((120, 6)).astype(np.float32))
    cfg = SamplerConfig(budget=5, seed=0)
    single = kmeans(samples, 5, cfg)
    best = kmeans_best(samples, 5, cfg, restarts=8)
    assert best.inertia_trace[-1] <= single.inertia_trace[-1] + 1e-9


def test_random_labelled_set_properties():
    idx = random_labelled_set(100, 20, seed=5)
    assert idx.shape == (20,)
    assert len(set(idx)) == 20
    assert np.array_equal(idx, np.sort(idx))
    assert np.array_equal(idx, random_labelled_set(100, 20, seed=5))
    with pytest.raises(NotEnoughPoints):
        random_labelled_set(10, 11, seed=0)


def test_sample_labelled_set_no_filter_full_budget():
    # with no filtering and k = M every sample is its own medoid
    rng = np.random.default_rng(10)
    samples = EmbeddingSet(unit_rows(rng, 12, 6), normalized=True)
    probs = ProbMatrix(np.full((12, 3), 1.0 / 3))
    cfg = SamplerConfig(budget=12, strategy=FilterStrategy.NO_FILTER, seed=0)
    assert np.array_equal(sample_labelled_set(samples, probs, cfg), np.arange(12))


def test_sample_labelled_set_respects_filter():
    rng = np.random.default_rng(12)
    samples = EmbeddingSet(unit_rows(rng, 50, 6), normalized=True)
    conf = rng.uniform(size=50)
    probs_arr = np.column_stack([conf, 1.0 - conf])
    probs = ProbMatrix(probs_arr)
    cfg = SamplerConfig(budget=5, quantiles=5, seed=3)
    chosen = sample_labelled_set(samples, probs, cfg)
    retained = set(quantile_filter(np.maximum(conf, 1 - conf), cfg))
    assert set(chosen) <= retained
    assert chosen.shape == (5,)
