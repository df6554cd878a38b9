"""Class-probability prediction and per-sample confidence.

Probabilities come from a temperature softmax over cosine similarities
between unit-norm sample embeddings and unit-norm class anchors. The
default temperature of 0.01 matches the logit-scale convention of
pretrained contrastive encoders; it is configurable everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datamodel import ClassEmbeddings, EmbeddingSet, ProbMatrix
from .errors import DimMismatch, NotNormalized

DEFAULT_TEMPERATURE = 0.01


@dataclass(frozen=True)
class Temperature:
    value: float = DEFAULT_TEMPERATURE

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError("temperature must be positive")


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row softmax with per-row max subtraction, in 64-bit."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    return expd / expd.sum(axis=1, keepdims=True)


def _check_unit_rows(matrix: np.ndarray, what: str) -> None:
    norms = np.sqrt(np.sum(matrix.astype(np.float64) ** 2, axis=1))
    if norms.size and np.any(np.abs(norms - 1.0) > 1e-4):
        raise NotNormalized(f"{what} rows are not unit-norm")


def predict_probs(
    samples: EmbeddingSet, classes: ClassEmbeddings, temp: Temperature
) -> ProbMatrix:
    """Softmax over cosine similarities: p[i,k] = exp(z_i.w_k/t) / sum_j exp(z_i.w_j/t)."""
    if samples.dim != classes.dim:
        raise DimMismatch(
            f"sample dim {samples.dim} != class dim {classes.dim}"
        )
    if not samples.normalized:
        _check_unit_rows(samples.data, "sample")
    _check_unit_rows(classes.weights, "class")
    sims = samples.data.astype(np.float64) @ classes.weights.astype(np.float64).T
    return ProbMatrix(softmax_rows(sims / temp.value))


def confidence(probs: ProbMatrix) -> np.ndarray:
    """Per-sample confidence: the maximum probability over classes."""
    return probs.probs.max(axis=1)


def argmax_labels(probs: ProbMatrix) -> np.ndarray:
    """Row argmax; ties broken by lowest class index."""
    return np.argmax(probs.probs, axis=1).astype(np.int64)
