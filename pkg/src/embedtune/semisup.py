"""Confidence-aware set construction and the training losses.

The unlabelled pool splits into a confident set (cluster pseudo-labels
plus per-class top-confidence predictions, trained with cross-entropy)
and a weak set (everything else, trained with a partial-label loss over
its top-k candidate classes).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .datamodel import ProbMatrix
from .errors import EmptyBatch, TopKExceedsClasses
from .scoring import argmax_labels, confidence

LOG_FLOOR = 1e-12


@dataclass(frozen=True)
class SslConfig:
    tau: float = 0.05       # fraction of the pool promoted to the confident set
    top_k: int = 2          # candidate classes per weak sample
    lam: float = 1.0        # weight of the weak-loss term

    def __post_init__(self):
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must be in (0, 1]")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.lam < 0.0:
            raise ValueError("lambda must be non-negative")


class SetKind(enum.IntEnum):
    LABELLED = 0
    CONFIDENT = 1
    WEAK = 2


def per_class_budget(tau: float, pool_size: int, class_count: int) -> int:
    """Per-class confident-set budget: round(tau * M / C), at least 1."""
    return max(1, int(math.floor(tau * pool_size / class_count + 0.5)))


def build_confident_set(probs: ProbMatrix, cluster_pseudo: list[tuple[int, int]],
                        labelled: list[tuple[int, int]],
                        config: SslConfig) -> list[tuple[int, int]]:
    """Cluster pseudo-labels plus the per-class top-confidence argmax samples.

    For each class, among samples whose argmax is that class and that are in
    neither the labelled set nor the cluster-pseudo set, the t most confident
    are added with that class as label (ties by lower sample index).
    """
    conf = confidence(probs)
    pred = argmax_labels(probs)
    t = per_class_budget(config.tau, probs.rows, probs.cols)
    excluded = {i for i, _ in labelled} | {i for i, _ in cluster_pseudo}

    result = list(cluster_pseudo)
    for c in range(probs.cols):
        members = np.where(pred == c)[0]
        members = members[[i not in excluded for i in members]]
        if members.size == 0:
            continue
        order = np.argsort(-conf[members], kind="stable")
        for idx in members[order][:t]:
            result.append((int(idx), c))
    return result


def build_weak_set(probs: ProbMatrix, exclude: set[int],
                   config: SslConfig) -> list[tuple[int, np.ndarray]]:
    """Top-k candidate masks for every pool sample not excluded."""
    if config.top_k > probs.cols:
        raise TopKExceedsClasses(
            f"top_k {config.top_k} exceeds class count {probs.cols}"
        )
    # stable argsort on -probs: ties by lower class index
    top = np.argsort(-probs.probs, axis=1, kind="stable")[:, :config.top_k]
    weak: list[tuple[int, np.ndarray]] = []
    for i in range(probs.rows):
        if i in exclude:
            continue
        mask = np.zeros(probs.cols, dtype=np.int8)
        mask[top[i]] = 1
        weak.append((i, mask))
    return weak


def partial_label_loss(probs_row: np.ndarray, mask: np.ndarray) -> float:
    """Negative sum of log-probabilities over candidate classes.

    With a one-hot mask this is exactly cross-entropy. Log arguments are
    floored at 1e-12 to keep the loss finite.
    """
    row = np.asarray(probs_row, dtype=np.float64)
    return float(-np.sum(np.asarray(mask) * np.log(np.maximum(row, LOG_FLOOR))))


def cross_entropy(probs_row: np.ndarray, label: int) -> float:
    return float(-np.log(max(float(probs_row[label]), LOG_FLOOR)))


@dataclass(frozen=True)
class BatchMembership:
    """Per-row supervision for a training batch.

    kinds[i] selects the set; labels[i] is the class for labelled/confident
    rows (ignored for weak rows); masks[i] is the candidate mask for weak
    rows (ignored otherwise).
    """

    kinds: np.ndarray    # (B,) SetKind values
    labels: np.ndarray   # (B,) int
    masks: np.ndarray    # (B, C) int8

    @property
    def size(self) -> int:
        return self.kinds.shape[0]


def combined_loss(head_probs: ProbMatrix, batch: BatchMembership,
                  config: SslConfig) -> float:
    """Mean CE over labelled rows + mean CE over confident rows + lambda *
    mean partial-label loss over weak rows. Terms with no members are 0."""
    if batch.size == 0:
        raise EmptyBatch("cannot compute a loss over an empty batch")
    probs = head_probs.probs
    total = 0.0
    for kind in (SetKind.LABELLED, SetKind.CONFIDENT):
        rows = np.where(batch.kinds == kind)[0]
        if rows.size:
            term = sum(cross_entropy(probs[i], int(batch.labels[i])) for i in rows)
            total += term / rows.size
    weak_rows = np.where(batch.kinds == SetKind.WEAK)[0]
    if weak_rows.size:
        term = sum(partial_label_loss(probs[i], batch.masks[i]) for i in weak_rows)
        total += config.lam * term / weak_rows.size
    return total
