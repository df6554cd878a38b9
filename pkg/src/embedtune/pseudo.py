"""Cluster-guided pseudo-labelling.

Labelled samples act as fixed cluster centres; every other sample joins
its nearest anchor, and the p nearest members of each anchor inherit the
anchor's class. No probabilities are involved, so the result is immune
to miscalibrated class anchors by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datamodel import EmbeddingSet
from .errors import DuplicateAnchor, IndexOutOfRange, MissingGroundTruth


@dataclass(frozen=True)
class AnchorClusters:
    anchor_indices: np.ndarray            # (N,) sample indices of the anchors
    member_indices: list[np.ndarray]      # per anchor, sorted by distance then index
    member_distances: list[np.ndarray]    # matching squared distances, ascending


def assign_to_anchors(samples: EmbeddingSet, labelled: np.ndarray) -> AnchorClusters:
    """Assign every non-anchor sample to its nearest anchor (squared Euclidean).

    Anchors stay fixed; there is no iteration. Ties go to the lower anchor
    index; member lists are sorted by (distance, sample index).
    """
    anchors = np.asarray(labelled, dtype=np.int64)
    if anchors.size != np.unique(anchors).size:
        raise DuplicateAnchor("labelled indices must be distinct")
    if anchors.size and (anchors.min() < 0 or anchors.max() >= samples.count):
        raise IndexOutOfRange("labelled index outside the sample range")

    data = samples.data.astype(np.float64)
    centers = data[anchors]
    others = np.setdiff1d(np.arange(samples.count, dtype=np.int64), anchors)

    member_indices: list[np.ndarray] = []
    member_distances: list[np.ndarray] = []
    if others.size == 0:
        empty_i = np.empty(0, dtype=np.int64)
        empty_d = np.empty(0, dtype=np.float64)
        return AnchorClusters(anchors, [empty_i] * anchors.size, [empty_d] * anchors.size)

    pts = data[others]
    d2 = (
        np.sum(pts ** 2, axis=1)[:, None]
        + np.sum(centers ** 2, axis=1)[None, :]
        - 2.0 * pts @ centers.T
    )
    d2 = np.maximum(d2, 0.0)
    assign = np.argmin(d2, axis=1)
    for j in range(anchors.size):
        local = np.where(assign == j)[0]
        dist = d2[local, j]
        order = np.lexsort((others[local], dist))
        member_indices.append(others[local][order])
        member_distances.append(dist[order])
    return AnchorClusters(anchors, member_indices, member_distances)


def cluster_pseudolabels(clusters: AnchorClusters, anchor_labels: np.ndarray,
                         p: int) -> list[tuple[int, int]]:
    """For each anchor, label its min(p, member count) nearest members."""
    if p < 0:
        raise ValueError("p must be non-negative")
    anchor_labels = np.asarray(anchor_labels, dtype=np.int64)
    pairs: list[tuple[int, int]] = []
    for j, members in enumerate(clusters.member_indices):
        label = int(anchor_labels[j])
        for idx in members[:p]:
            pairs.append((int(idx), label))
    return pairs


def pseudolabel_accuracy(pseudo: list[tuple[int, int]], truth: np.ndarray) -> float:
    """Fraction of pseudo-label pairs matching ground truth; 1.0 on empty input."""
    if truth is None:
        raise MissingGroundTruth("ground-truth labels are required")
    if not pseudo:
        return 1.0
    correct = 0
    for idx, label in pseudo:
        actual = int(truth[idx])
        if actual < 0:
            raise MissingGroundTruth(f"sample {idx} has no ground-truth label")
        correct += int(actual == label)
    return correct / len(pseudo)
