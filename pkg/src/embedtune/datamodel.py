"""Core data types and file formats.

Embeddings are stored as 32-bit floats; reductions (norms, dot products)
run in 64-bit. The on-disk format is EMB1: little-endian, magic "EMB1",
u32 version (=1), u32 row count, u32 dim, then rows*dim float32 values
in row-major order. Labels and class names travel in plain text files,
one entry per line.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    IoFailure,
    MalformedHeader,
    NonFiniteValue,
    TruncatedPayload,
    ZeroNormRow,
)

EMB1_MAGIC = b"EMB1"
EMB1_VERSION = 1
_HEADER = struct.Struct("<4sIII")

NORM_TOL = 1e-5


@dataclass(frozen=True)
class EmbeddingSet:
    """M x d matrix of sample embeddings with optional ground-truth labels.

    ``labels`` uses -1 for rows without a ground-truth label. Instances are
    immutable after construction and safe to share across threads.
    """

    data: np.ndarray
    normalized: bool = False
    labels: np.ndarray | None = None

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float32)
        if data.ndim != 2:
            raise ValueError("embedding data must be a 2-D matrix")
        object.__setattr__(self, "data", data)
        if not np.all(np.isfinite(data)):
            raise NonFiniteValue("embedding data contains NaN/Inf")
        if self.normalized and data.shape[0] > 0:
            norms = np.sqrt(np.sum(data.astype(np.float64) ** 2, axis=1))
            if np.any(np.abs(norms - 1.0) > NORM_TOL):
                bad = int(np.argmax(np.abs(norms - 1.0)))
                raise ValueError(
                    f"normalized flag set but row {bad} has norm {norms[bad]:.6g}"
                )
        if self.labels is not None:
            labels = np.ascontiguousarray(self.labels, dtype=np.int64)
            if labels.shape != (data.shape[0],):
                raise ValueError("labels must have one entry per row")
            object.__setattr__(self, "labels", labels)

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def take(self, indices) -> "EmbeddingSet":
        """Row subset keeping normalization flag and labels."""
        idx = np.asarray(indices, dtype=np.int64)
        labels = self.labels[idx] if self.labels is not None else None
        return EmbeddingSet(self.data[idx], normalized=self.normalized, labels=labels)


@dataclass(frozen=True)
class ClassEmbeddings:
    """C x d matrix of class-anchor embeddings, optionally with class names.

    Doubles as the initial parameter matrix of the learnable head.
    """

    weights: np.ndarray
    names: list[str] | None = None

    def __post_init__(self):
        weights = np.ascontiguousarray(self.weights, dtype=np.float32)
        if weights.ndim != 2:
            raise ValueError("class weights must be a 2-D matrix")
        object.__setattr__(self, "weights", weights)
        if not np.all(np.isfinite(weights)):
            raise NonFiniteValue("class weights contain NaN/Inf")
        if self.names is not None and len(self.names) != weights.shape[0]:
            raise ValueError("one name per class required")

    @property
    def class_count(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class ProbMatrix:
    """M x C row-stochastic matrix of predicted class probabilities."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.ascontiguousarray(self.probs, dtype=np.float64)
        if probs.ndim != 2:
            raise ValueError("probabilities must be a 2-D matrix")
        object.__setattr__(self, "probs", probs)
        if probs.size:
            if probs.min() < -0.0 or probs.max() > 1.0 + 1e-12:
                raise ValueError("probabilities must lie in [0, 1]")
            sums = probs.sum(axis=1)
            if np.any(np.abs(sums - 1.0) > 1e-5):
                raise ValueError("every probability row must sum to 1")

    @property
    def rows(self) -> int:
        return self.probs.shape[0]

    @property
    def cols(self) -> int:
        return self.probs.shape[1]


@dataclass(frozen=True)
class LabelSets:
    """The four index sets of the method.

    labelled:       (sampleIndex, classIndex) pairs with ground-truth labels
    cluster_pseudo: pairs pseudo-labelled by proximity to labelled anchors
    confident:      cluster_pseudo plus per-class top-confidence pairs
    weak:           (sampleIndex, candidateMask) with C-length binary masks
    """

    labelled: list[tuple[int, int]] = field(default_factory=list)
    cluster_pseudo: list[tuple[int, int]] = field(default_factory=list)
    confident: list[tuple[int, int]] = field(default_factory=list)
    weak: list[tuple[int, np.ndarray]] = field(default_factory=list)

    def validate(self) -> None:
        lab = {i for i, _ in self.labelled}
        pse = {i for i, _ in self.cluster_pseudo}
        con = {i for i, _ in self.confident}
        wea = {i for i, _ in self.weak}
        if not pse <= con:
            raise ValueError("cluster-pseudo set must be a subset of the confident set")
        extra = con - pse
        if lab & extra or lab & pse or lab & wea or con & wea:
            raise ValueError("labelled / confident / weak sets must be disjoint")
        for i, mask in self.weak:
            ones = int(np.sum(mask))
            if ones < 1 or ones > mask.shape[0]:
                raise ValueError(f"candidate mask of sample {i} has {ones} ones")

    def sizes(self) -> tuple[int, int, int, int]:
        return (
            len(self.labelled),
            len(self.cluster_pseudo),
            len(self.confident),
            len(self.weak),
        )


def load_embeddings(path, labels_path=None) -> EmbeddingSet:
    """Read an EMB1 file, optionally attaching a text label file."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc

    if len(raw) < _HEADER.size:
        raise MalformedHeader(f"{path}: file shorter than EMB1 header")
    magic, version, rows, dim = _HEADER.unpack_from(raw)
    if magic != EMB1_MAGIC:
        raise MalformedHeader(f"{path}: bad magic {magic!r}")
    if version != EMB1_VERSION:
        raise MalformedHeader(f"{path}: unsupported version {version}")

    expected = rows * dim * 4
    payload = raw[_HEADER.size:]
    if len(payload) < expected:
        raise TruncatedPayload(
            f"{path}: expected {expected} payload bytes, found {len(payload)}"
        )
    data = np.frombuffer(payload[:expected], dtype="<f4").reshape(rows, dim)
    if not np.all(np.isfinite(data)):
        raise NonFiniteValue(f"{path}: payload contains NaN/Inf")

    labels = load_labels(labels_path, rows) if labels_path is not None else None
    return EmbeddingSet(data.copy(), labels=labels)


def write_embeddings(emb_set: EmbeddingSet, path) -> None:
    """Write an EmbeddingSet as an EMB1 file that load_embeddings inverts exactly."""
    header = _HEADER.pack(EMB1_MAGIC, EMB1_VERSION, emb_set.count, emb_set.dim)
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(emb_set.data.astype("<f4", copy=False).tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_labels(path, expected_rows=None) -> np.ndarray:
    """Read a label file: one class index per line, blank line = unlabelled (-1)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    labels = np.array(
        [int(line) if line.strip() else -1 for line in lines], dtype=np.int64
    )
    if expected_rows is not None and labels.shape[0] != expected_rows:
        raise MalformedHeader(
            f"{path}: {labels.shape[0]} label lines for {expected_rows} rows"
        )
    return labels


def write_labels(labels: np.ndarray, path) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for value in labels:
                fh.write("" if value < 0 else str(int(value)))
                fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_class_names(path) -> list[str]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc


def write_class_names(names: list[str], path) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for name in names:
                fh.write(name + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def normalize_rows(emb_set: EmbeddingSet) -> EmbeddingSet:
    """Scale every row to unit Euclidean norm (norms accumulated in 64-bit)."""
    norms = np.sqrt(np.sum(emb_set.data.astype(np.float64) ** 2, axis=1))
    zero = np.where(norms == 0.0)[0]
    if zero.size:
        raise ZeroNormRow(int(zero[0]))
    data = (emb_set.data.astype(np.float64) / norms[:, None]).astype(np.float32)
    return EmbeddingSet(data, normalized=True, labels=emb_set.labels)
