"""Readers for the exported matrix/label files this harness consumes.

Wire format contract: binary matrices carry a 4-byte b"WFM1" magic, then
little-endian uint32 rows and cols, then row-major little-endian float32
values. The parallel labels CSV has columns filename,label,circuit; the
unmonitored (background) class is labeled -1.
"""

from __future__ import annotations

import csv
import struct

import numpy as np

UNMONITORED = -1


def read_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != b"WFM1":
            raise ValueError(f"{path}: bad magic {magic!r}")
        rows, cols = struct.unpack("<II", fh.read(8))
        data = np.frombuffer(fh.read(), dtype="<f4")
    if data.size != rows * cols:
        raise ValueError(f"{path}: expected {rows * cols} values, got {data.size}")
    return data.reshape(rows, cols).astype(np.float32)


def read_labels(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "label" not in reader.fieldnames:
            raise ValueError(f"{path}: labels CSV needs a 'label' column")
        labels = [int(row["label"]) for row in reader]
    if not labels:
        raise ValueError(f"{path}: labels CSV has no rows")
    return np.asarray(labels, dtype=np.int64)


def load_dataset(matrix_path, labels_path) -> tuple[np.ndarray, np.ndarray]:
    X = read_matrix(matrix_path)
    y = read_labels(labels_path)
    if len(y) != X.shape[0]:
        raise ValueError(
            f"{labels_path}: {len(y)} labels for {X.shape[0]} matrix rows"
        )
    return X, y
