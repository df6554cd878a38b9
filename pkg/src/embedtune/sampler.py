"""Weakly-supervised labelled-set selection.

Two-step protocol: quantile confidence filtering on the zero-shot
predictions, then k-means over the retained embeddings with one medoid
per cluster. Filtering-strategy variants and a seeded random baseline
are included for ablations.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .datamodel import EmbeddingSet, ProbMatrix
from .errors import EmptyCluster, NotEnoughPoints, TooFewSamples
from .scoring import confidence


class FilterStrategy(enum.Enum):
    REMOVE_BOTH = "remove-both"
    REMOVE_LOW_ONLY = "remove-low"
    REMOVE_HIGH_ONLY = "remove-high"
    KEEP_HIGH_ONLY = "keep-high"
    KEEP_LOW_ONLY = "keep-low"
    NO_FILTER = "no-filter"


class ClusterAlgo(enum.Enum):
    LLOYD = "kmeans"
    PLUS_PLUS_INIT = "kmeans++"
    BISECTING_PLUS_PLUS = "bisecting-kmeans++"


@dataclass(frozen=True)
class ClusterResult:
    assignments: np.ndarray          # (n,) cluster ids in [0, k)
    centroids: np.ndarray            # (k, d)
    inertia_trace: list[float] = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


@dataclass(frozen=True)
class SamplerConfig:
    budget: int
    quantiles: int = 5
    strategy: FilterStrategy = FilterStrategy.REMOVE_BOTH
    cluster_algo: ClusterAlgo = ClusterAlgo.LLOYD
    max_iterations: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.strategy is FilterStrategy.REMOVE_BOTH and self.quantiles < 3:
            raise ValueError("remove-both filtering needs at least 3 quantiles")
        if self.quantiles < 2 and self.strategy is not FilterStrategy.NO_FILTER:
            raise ValueError("quantile count must be >= 2")


def quantile_filter(conf: np.ndarray, config: SamplerConfig) -> np.ndarray:
    """Retain sample indices per the filtering strategy.

    Samples are sorted by confidence descending (ties by lower index), split
    into q quantiles at boundaries floor(k*M/q), and the extreme quantiles are
    dropped or kept per the strategy. Returns retained indices in ascending
    order.
    """
    conf = np.asarray(conf, dtype=np.float64)
    m = conf.shape[0]
    if config.strategy is FilterStrategy.NO_FILTER:
        return np.arange(m, dtype=np.int64)

    q = config.quantiles
    if m < q:
        raise TooFewSamples(f"{m} samples cannot fill {q} quantiles")

    # stable argsort on -conf: descending confidence, ties by lower index
    order = np.argsort(-conf, kind="stable")
    hi = m // q                 # end of the most-confident quantile
    lo = (q - 1) * m // q       # start of the least-confident quantile

    strategy = config.strategy
    if strategy is FilterStrategy.REMOVE_BOTH:
        retained = order[hi:lo]
    elif strategy is FilterStrategy.REMOVE_LOW_ONLY:
        retained = order[:lo]
    elif strategy is FilterStrategy.REMOVE_HIGH_ONLY:
        retained = order[hi:]
    elif strategy is FilterStrategy.KEEP_HIGH_ONLY:
        retained = order[:hi]
    elif strategy is FilterStrategy.KEEP_LOW_ONLY:
        retained = order[lo:]
    else:  # pragma: no cover
        raise ValueError(f"unknown strategy {strategy}")
    return np.sort(retained).astype(np.int64)


def _squared_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, clipped at zero."""
    p2 = np.sum(points ** 2, axis=1)[:, None]
    c2 = np.sum(centers ** 2, axis=1)[None, :]
    d2 = p2 + c2 - 2.0 * points @ centers.T
    return np.maximum(d2, 0.0)


def _init_plus_plus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centroids[0] = points[first]
    closest = _squared_distances(points, centroids[:1]).ravel()
    for j in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            # all remaining points coincide with a centroid; pick uniformly
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=closest / total))
        centroids[j] = points[idx]
        closest = np.minimum(closest, _squared_distances(points, centroids[j:j + 1]).ravel())
    return centroids


def _init_bisecting(points: np.ndarray, k: int, rng: np.random.Generator,
                    max_iterations: int) -> np.ndarray:
    """Recursive 2-way ++ splits of the highest-inertia cluster."""
    clusters = [np.arange(points.shape[0])]
    while len(clusters) < k:
        inertias = []
        for members in clusters:
            sub = points[members]
            inertias.append(float(np.sum((sub - sub.mean(axis=0)) ** 2)))
        target = int(np.argmax(inertias))
        members = clusters.pop(target)
        if members.shape[0] < 2:
            # cannot split a singleton; put it back and split the next largest
            clusters.append(members)
            sizes = [len(c) for c in clusters]
            target = int(np.argmax(sizes))
            members = clusters.pop(target)
        sub = points[members]
        result = _lloyd(sub, 2, _init_plus_plus(sub, 2, rng), max_iterations)
        for j in range(2):
            part = members[result.assignments == j]
            if part.size:
                clusters.append(part)
    return np.array([points[members].mean(axis=0) for members in clusters])


def _lloyd(points: np.ndarray, k: int, centroids: np.ndarray,
           max_iterations: int) -> ClusterResult:
    """Lloyd iterations to an assignment fixpoint, with empty-cluster repair."""
    centroids = centroids.astype(np.float64, copy=True)
    prev = None
    trace: list[float] = []
    for _ in range(max_iterations):
        d2 = _squared_distances(points, centroids)
        assign = np.argmin(d2, axis=1)
        # reseed empty clusters with the point farthest from its centroid;
        # a reseed can steal another cluster's last member, so repeat until
        # every cluster is populated
        empty = np.setdiff1d(np.arange(k), assign)
        used = np.zeros(points.shape[0], dtype=bool)
        while empty.size:
            j = int(empty[0])
            own = d2[np.arange(points.shape[0]), assign].copy()
            own[used] = -1.0  # don't pick the same point for two repairs
            far = int(np.argmax(own))
            used[far] = True
            centroids[j] = points[far]
            d2[:, j] = _squared_distances(points, centroids[j:j + 1]).ravel()
            assign = np.argmin(d2, axis=1)
            assign[far] = j   # claim the reseed point even on distance ties
            empty = np.setdiff1d(np.arange(k), assign)
        if prev is not None and np.array_equal(assign, prev):
            break
        for j in range(k):
            centroids[j] = points[assign == j].mean(axis=0)
        inertia = float(np.sum((points - centroids[assign]) ** 2))
        trace.append(inertia)
        prev = assign
    return ClusterResult(assignments=prev.astype(np.int64), centroids=centroids,
                         inertia_trace=trace)


def kmeans(samples: EmbeddingSet, k: int, config: SamplerConfig) -> ClusterResult:
    """Cluster the sample rows into k groups per config.cluster_algo."""
    points = samples.data.astype(np.float64)
    n = points.shape[0]
    if n < k:
        raise NotEnoughPoints(f"{n} points cannot form {k} clusters")
    rng = np.random.default_rng(config.seed)
    if config.cluster_algo is ClusterAlgo.LLOYD:
        centroids = points[rng.choice(n, size=k, replace=False)]
    elif config.cluster_algo is ClusterAlgo.PLUS_PLUS_INIT:
        centroids = _init_plus_plus(points, k, rng)
    else:
        centroids = _init_bisecting(points, k, rng, config.max_iterations)
    return _lloyd(points, k, centroids, config.max_iterations)


def select_medoids(samples: EmbeddingSet, clusters: ClusterResult) -> np.ndarray:
    """Per cluster, the member closest to the centroid (ties by lower index)."""
    points = samples.data.astype(np.float64)
    medoids = np.empty(clusters.k, dtype=np.int64)
    for j in range(clusters.k):
        members = np.where(clusters.assignments == j)[0]
        if members.size == 0:
            raise EmptyCluster(f"cluster {j} has no members")
        d2 = np.sum((points[members] - clusters.centroids[j]) ** 2, axis=1)
        medoids[j] = members[int(np.argmin(d2))]
    return medoids


def kmeans_best(samples: EmbeddingSet, k: int, config: SamplerConfig,
                restarts: int) -> ClusterResult:
    """Best-of-n restarts by final inertia; restart r runs with seed+r."""
    best = None
    for r in range(restarts):
        run = kmeans(samples, k, SamplerConfig(
            budget=config.budget, quantiles=config.quantiles,
            strategy=config.strategy, cluster_algo=config.cluster_algo,
            max_iterations=config.max_iterations, seed=config.seed + r))
        if best is None or run.inertia_trace[-1] < best.inertia_trace[-1]:
            best = run
    return best


def random_labelled_set(count: int, budget: int, seed: int) -> np.ndarray:
    """Uniform selection of `budget` indices without replacement (baseline)."""
    if count < budget:
        raise NotEnoughPoints(f"budget {budget} exceeds pool size {count}")
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(count, size=budget, replace=False)).astype(np.int64)


def sample_labelled_set(samples: EmbeddingSet, probs: ProbMatrix,
                        config: SamplerConfig) -> np.ndarray:
    """Quantile filter, k-means with k = budget, then medoid per cluster."""
    conf = confidence(probs)
    retained = quantile_filter(conf, config)
    if retained.shape[0] < config.budget:
        raise NotEnoughPoints(
            f"{retained.shape[0]} retained samples for budget {config.budget}"
        )
    subset = samples.take(retained)
    clusters = kmeans(subset, config.budget, config)
    medoids = select_medoids(subset, clusters)
    return np.sort(retained[medoids])
