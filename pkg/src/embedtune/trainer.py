"""Learnable class-embedding head and the multi-session training loop.

The head is a C x d matrix initialized from the zero-shot class anchors
and trained with plain mini-batch SGD on the combined loss. Rows are
re-normalized to unit norm after every update so the similarity stays a
true cosine. Per session, the confident and weak sets are rebuilt from
the current head's predictions; the cluster pseudo-labels are computed
once before session 1 and frozen.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .datamodel import ClassEmbeddings, EmbeddingSet, LabelSets, ProbMatrix
from .errors import (
    DimMismatch,
    EmptyBatch,
    MissingGroundTruth,
    NonFiniteGradient,
)
from .pseudo import assign_to_anchors, cluster_pseudolabels, pseudolabel_accuracy
from .sampler import SamplerConfig
from .scoring import Temperature, softmax_rows

from .semisup import (
    LOG_FLOOR,
    BatchMembership,
    SetKind,
    SslConfig,
    build_confident_set,
    build_weak_set,
)

# Softmax temperature used while training the head. Deliberately softer than
# the zero-shot scoring default: at the pinned learning rate of 0.02 the
# update magnitude scales with 1/temperature, and 0.01 makes SGD oscillate.
TRAIN_TEMPERATURE = 0.5


@dataclass
class Head:
    """Learnable class embeddings; rows kept at unit norm between steps."""

    weights: np.ndarray  # (C, d) float64
    temperature: Temperature = field(default_factory=Temperature)

    def __post_init__(self):
        self.weights = np.ascontiguousarray(self.weights, dtype=np.float64)

    @classmethod
    def from_class_embeddings(cls, classes: ClassEmbeddings,
                              temperature: Temperature | None = None) -> "Head":
        temp = temperature if temperature is not None else Temperature()
        return cls(weights=classes.weights.astype(np.float64), temperature=temp)

    @property
    def class_count(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class TrainConfig:
    sessions: int = 10
    epochs_per_session: int = 50
    learning_rate: float = 0.02
    batch_size: int = 64
    seed: int = 0
    ssl_config: SslConfig = field(default_factory=SslConfig)
    sampler_config: SamplerConfig | None = None
    p: int = 50  # pseudo-labels per cluster
    temperature: Temperature = field(
        default_factory=lambda: Temperature(TRAIN_TEMPERATURE))

    def __post_init__(self):
        if self.sessions < 1 or self.epochs_per_session < 0:
            raise ValueError("sessions must be >= 1 and epochs >= 0")
        if self.learning_rate <= 0 or self.batch_size < 1:
            raise ValueError("learning rate and batch size must be positive")
        if self.p < 0:
            raise ValueError("p must be non-negative")


@dataclass(frozen=True)
class SessionMetrics:
    session: int
    pseudo_label_accuracy: float
    test_accuracy: float
    mean_loss: float
    set_sizes: tuple[int, int, int, int]

    def to_json(self) -> str:
        return json.dumps({
            "session": self.session,
            "pseudo_acc": self.pseudo_label_accuracy,
            "test_acc": self.test_accuracy,
            "mean_loss": self.mean_loss,
            "sizes": list(self.set_sizes),
        })


def head_forward(head: Head, batch: np.ndarray | EmbeddingSet) -> ProbMatrix:
    """Temperature softmax over dot products with the head rows.

    Matches scoring.predict_probs exactly when the head was just initialized
    from the same class embeddings (head rows are unit-norm by invariant).
    """
    data = batch.data if isinstance(batch, EmbeddingSet) else batch
    if data.shape[1] != head.dim:
        raise DimMismatch(f"batch dim {data.shape[1]} != head dim {head.dim}")
    sims = data.astype(np.float64) @ head.weights.T
    return ProbMatrix(softmax_rows(sims / head.temperature.value))


def batch_loss_and_grad(weights: np.ndarray, batch_data: np.ndarray,
                        batch: BatchMembership, temperature: float,
                        lam: float) -> tuple[float, np.ndarray]:
    """Combined loss and its analytic gradient w.r.t. the head weights.

    The forward path uses true cosine similarity (rows of `weights` need not
    be unit-norm), so the gradient includes the normalization Jacobian. This
    keeps the function well-defined for finite-difference checks.
    """
    if batch.size == 0:
        raise EmptyBatch("cannot step on an empty batch")
    z = batch_data.astype(np.float64)
    w = np.asarray(weights, dtype=np.float64)
    r = np.sqrt(np.sum(w ** 2, axis=1))
    w_hat = w / r[:, None]
    sims = z @ w_hat.T
    probs = softmax_rows(sims / temperature)

    lab_rows = np.where(batch.kinds == SetKind.LABELLED)[0]
    con_rows = np.where(batch.kinds == SetKind.CONFIDENT)[0]
    weak_rows = np.where(batch.kinds == SetKind.WEAK)[0]

    loss = 0.0
    g = np.zeros_like(probs)  # dLoss/dlogits
    for rows in (lab_rows, con_rows):
        if rows.size == 0:
            continue
        alpha = 1.0 / rows.size
        labels = batch.labels[rows]
        loss += alpha * float(
            -np.sum(np.log(np.maximum(probs[rows, labels], LOG_FLOOR)))
        )
        g[rows] += alpha * probs[rows]
        g[rows, labels] -= alpha
    if weak_rows.size:
        alpha = lam / weak_rows.size
        masks = batch.masks[weak_rows].astype(np.float64)
        loss += alpha * float(
            -np.sum(masks * np.log(np.maximum(probs[weak_rows], LOG_FLOOR)))
        )
        g[weak_rows] += alpha * (
            masks.sum(axis=1, keepdims=True) * probs[weak_rows] - masks
        )

    # d sims[i,k] / d w_k = (z_i - sims[i,k] * w_hat_k) / r_k
    a = g.T @ z                                      # (C, d)
    b = np.sum(g * sims, axis=0)                     # (C,)
    grad = (a - b[:, None] * w_hat) / (temperature * r[:, None])
    return loss, grad


def _renormalized(weights: np.ndarray) -> np.ndarray:
    norms = np.sqrt(np.sum(weights ** 2, axis=1, keepdims=True))
    return weights / norms


def grad_step(head: Head, batch_data: np.ndarray, batch: BatchMembership,
              config: TrainConfig) -> tuple[Head, float]:
    """One SGD step; returns the updated head and the pre-step batch loss."""
    loss, grad = batch_loss_and_grad(
        head.weights, batch_data, batch,
        head.temperature.value, config.ssl_config.lam,
    )
    if not np.all(np.isfinite(grad)):
        raise NonFiniteGradient("gradient contains NaN/Inf")
    weights = _renormalized(head.weights - config.learning_rate * grad)
    return Head(weights=weights, temperature=head.temperature), loss


def evaluate(head: Head, test: EmbeddingSet) -> float:
    """Argmax accuracy of the head on a labelled test set."""
    if test.count == 0:
        raise MissingGroundTruth("cannot evaluate on an empty test set")
    if test.labels is None or np.any(test.labels < 0):
        raise MissingGroundTruth("test set has missing ground-truth labels")
    probs = head_forward(head, test)
    pred = np.argmax(probs.probs, axis=1)
    return float(np.mean(pred == test.labels))


def _build_training_items(sets: LabelSets, class_count: int):
    """Flatten the label sets into parallel index/kind/label/mask arrays."""
    idxs: list[int] = []
    kinds: list[int] = []
    labels: list[int] = []
    masks: list[np.ndarray] = []
    zero_mask = np.zeros(class_count, dtype=np.int8)
    for i, y in sets.labelled:
        idxs.append(i); kinds.append(SetKind.LABELLED); labels.append(y)
        masks.append(zero_mask)
    for i, y in sets.confident:
        idxs.append(i); kinds.append(SetKind.CONFIDENT); labels.append(y)
        masks.append(zero_mask)
    for i, mask in sets.weak:
        idxs.append(i); kinds.append(SetKind.WEAK); labels.append(-1)
        masks.append(mask)
    return (
        np.array(idxs, dtype=np.int64),
        np.array(kinds, dtype=np.int64),
        np.array(labels, dtype=np.int64),
        np.stack(masks) if masks else np.zeros((0, class_count), dtype=np.int8),
    )


def run_sessions(pool: EmbeddingSet, test: EmbeddingSet, classes: ClassEmbeddings,
                 labelled: list[tuple[int, int]], config: TrainConfig,
                 metrics_path=None) -> tuple[list[SessionMetrics], Head]:
    """Multi-session training: rebuild the confident/weak sets each session,
    then run epochs of mini-batch SGD on the combined loss.

    Cluster pseudo-labels are computed once from the labelled anchors before
    session 1 and stay frozen. Metrics are recorded after each session and,
    when metrics_path is given, appended there as one JSON line per session.
    """
    if pool.dim != classes.dim:
        raise DimMismatch("pool and class embeddings disagree on dimension")
    head = Head.from_class_embeddings(classes, config.temperature)

    anchor_idx = np.array([i for i, _ in labelled], dtype=np.int64)
    anchor_lab = np.array([y for _, y in labelled], dtype=np.int64)
    clusters = assign_to_anchors(pool, anchor_idx)
    x_p = cluster_pseudolabels(clusters, anchor_lab, config.p)

    metrics: list[SessionMetrics] = []
    sink = open(metrics_path, "w", encoding="utf-8") if metrics_path else None
    try:
        for session in range(1, config.sessions + 1):
            probs = head_forward(head, pool)
            confident = build_confident_set(probs, x_p, labelled, config.ssl_config)
            exclude = {i for i, _ in labelled} | {i for i, _ in confident}
            weak = build_weak_set(probs, exclude, config.ssl_config)
            sets = LabelSets(labelled=list(labelled), cluster_pseudo=list(x_p),
                             confident=confident, weak=weak)
            sets.validate()

            idxs, kinds, labels, masks = _build_training_items(
                sets, classes.class_count)
            rng = np.random.default_rng([config.seed, session])
            losses: list[float] = []
            for _ in range(config.epochs_per_session):
                order = rng.permutation(idxs.shape[0])
                for start in range(0, order.shape[0], config.batch_size):
                    sel = order[start:start + config.batch_size]
                    batch = BatchMembership(
                        kinds=kinds[sel], labels=labels[sel], masks=masks[sel])
                    head, loss = grad_step(head, pool.data[idxs[sel]], batch, config)
                    losses.append(loss)

            record = SessionMetrics(
                session=session,
                pseudo_label_accuracy=pseudolabel_accuracy(confident, pool.labels),
                test_accuracy=evaluate(head, test),
                mean_loss=float(np.mean(losses)) if losses else 0.0,
                set_sizes=sets.sizes(),
            )
            metrics.append(record)
            if sink is not None:
                sink.write(record.to_json() + "\n")
    finally:
        if sink is not None:
            sink.close()
    return metrics, head
