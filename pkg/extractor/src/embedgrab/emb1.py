"""EMB1 writer: the on-disk contract shared with the tuning core.

Little-endian: magic "EMB1", u32 version (=1), u32 rows, u32 dim, then
rows*dim float32 values in row-major order. Labels and class names are
plain text, one entry per line.
"""

import struct

import numpy as np

MAGIC = b"EMB1"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


def write_embeddings(matrix: np.ndarray, path) -> None:
    matrix = np.ascontiguousarray(matrix, dtype="<f4")
    if matrix.ndim != 2:
        raise ValueError("embedding matrix must be 2-D")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("embedding matrix contains NaN/Inf")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, matrix.shape[0], matrix.shape[1]))
        fh.write(matrix.tobytes())


def write_labels(labels, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for value in labels:
            fh.write(f"{int(value)}\n")


def write_class_names(names, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for name in names:
            fh.write(f"{name}\n")
