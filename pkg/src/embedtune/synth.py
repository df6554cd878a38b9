"""Synthetic Gaussian-mixture benchmarks with controllable anchor miscalibration.

Class means are random unit vectors with a minimum pairwise angle enforced
by rejection. The "pretrained" zero-shot anchors interpolate between the
true means and a seeded random rotation of the mean constellation (the
rotation acting within the span of the means, so a fully miscalibrated
anchor points at a mixture of other classes' regions).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datamodel import ClassEmbeddings, EmbeddingSet
from .errors import DimMismatch, RejectionBudgetExceeded

MAX_MEAN_COS = 0.5          # pairwise cosine cap for class means
REJECTION_BUDGET = 10_000   # total draws allowed while placing means


@dataclass(frozen=True)
class SynthSpec:
    class_count: int = 10
    dim: int = 32
    per_class: int = 200
    sigma: float = 0.05
    miscalibration: float = 0.6
    seed: int = 0

    def __post_init__(self):
        if self.class_count < 1 or self.dim < 1 or self.per_class < 1:
            raise ValueError("class_count, dim and per_class must be positive")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if not 0.0 <= self.miscalibration <= 1.0:
            raise ValueError("miscalibration must be in [0, 1]")
        if (self.per_class * 8) % 10 != 0:
            raise ValueError("per_class must make an integral 80/20 split")


def _unit(rows: np.ndarray) -> np.ndarray:
    return rows / np.sqrt(np.sum(rows ** 2, axis=1, keepdims=True))


def _place_means(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    means: list[np.ndarray] = []
    draws = 0
    while len(means) < spec.class_count:
        if draws >= REJECTION_BUDGET:
            raise RejectionBudgetExceeded(
                f"cannot place {spec.class_count} separated means in dim {spec.dim}"
            )
        draws += 1
        candidate = rng.standard_normal(spec.dim)
        candidate /= np.sqrt(np.sum(candidate ** 2))
        if all(abs(float(candidate @ m)) <= MAX_MEAN_COS for m in means):
            means.append(candidate)
    return np.stack(means)


def _rotated_means(means: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Random rotation of the mean constellation within its own span."""
    c = means.shape[0]
    # orthonormal basis of span(means): rows of vt from the thin SVD
    _, _, vt = np.linalg.svd(means, full_matrices=False)
    coords = means @ vt.T                        # (C, C) coordinates in the span
    gauss = rng.standard_normal((c, c))
    q, r = np.linalg.qr(gauss)
    q *= np.sign(np.diag(r))                     # Haar-distributed rotation
    return _unit(coords @ q.T @ vt)


def generate(spec: SynthSpec) -> tuple[EmbeddingSet, EmbeddingSet,
                                       ClassEmbeddings, ClassEmbeddings]:
    """Build (pool, test, zero-shot anchors, true anchors).

    Samples are per-class Gaussians around the means, re-normalized to the
    unit sphere, split 80/20 into pool/test per class. Zero-shot anchors are
    normalize((1 - m) * trueMean + m * rotatedMean).
    """
    rng = np.random.default_rng(spec.seed)
    means = _place_means(spec, rng)
    rotated = _rotated_means(means, rng)
    m = spec.miscalibration
    zero_shot = _unit((1.0 - m) * means + m * rotated)

    pool_rows, pool_labels = [], []
    test_rows, test_labels = [], []
    n_pool = spec.per_class * 8 // 10
    for c in range(spec.class_count):
        noise = rng.standard_normal((spec.per_class, spec.dim)) * spec.sigma
        samples = _unit(means[c][None, :] + noise)
        pool_rows.append(samples[:n_pool])
        test_rows.append(samples[n_pool:])
        pool_labels.append(np.full(n_pool, c, dtype=np.int64))
        test_labels.append(np.full(spec.per_class - n_pool, c, dtype=np.int64))

    pool_data = np.concatenate(pool_rows)
    pool_lab = np.concatenate(pool_labels)
    test_data = np.concatenate(test_rows)
    test_lab = np.concatenate(test_labels)

    # shuffle row order so class blocks don't leak into batching artefacts
    pool_perm = rng.permutation(pool_data.shape[0])
    test_perm = rng.permutation(test_data.shape[0])
    pool = EmbeddingSet(pool_data[pool_perm].astype(np.float32),
                        normalized=True, labels=pool_lab[pool_perm])
    test = EmbeddingSet(test_data[test_perm].astype(np.float32),
                        normalized=True, labels=test_lab[test_perm])
    names = [f"class_{c}" for c in range(spec.class_count)]
    return (
        pool,
        test,
        ClassEmbeddings(zero_shot.astype(np.float32), names=list(names)),
        ClassEmbeddings(means.astype(np.float32), names=list(names)),
    )


def oracle_nearest(queries: EmbeddingSet, anchors: np.ndarray) -> np.ndarray:
    """Brute-force nearest-anchor scan, written as naive scalar loops.

    Independent of the vectorized production paths on purpose: this is the
    reference the clustering and pseudo-labelling tests check against.
    """
    anchors = np.asarray(anchors, dtype=np.float64)
    if queries.dim != anchors.shape[1]:
        raise DimMismatch("query and anchor dimensions differ")
    out = np.empty(queries.count, dtype=np.int64)
    for i in range(queries.count):
        best_j = 0
        best_d = float("inf")
        for j in range(anchors.shape[0]):
            d = 0.0
            for t in range(anchors.shape[1]):
                diff = float(queries.data[i, t]) - float(anchors[j, t])
                d += diff * diff
            if d < best_d:
                best_d = d
                best_j = j
        out[i] = best_j
    return out
