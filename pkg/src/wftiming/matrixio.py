"""On-disk matrix and label formats shared by the pipeline stages.

Binary matrix file: 4-byte magic b"WFM1", uint32 rows, uint32 cols (both
little-endian), then rows*cols little-endian float32 values in row-major
order. The parallel labels CSV has header `filename,label,circuit` with one
row per matrix row; unmonitored traffic uses label -1.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

MAGIC = b"WFM1"
_HEADER = np.dtype([("rows", "<u4"), ("cols", "<u4")])


def write_matrix(path, matrix: np.ndarray) -> None:
    matrix = np.ascontiguousarray(matrix, dtype="<f4")
    if matrix.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {matrix.shape}")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        header = np.zeros(1, dtype=_HEADER)
        header["rows"] = matrix.shape[0]
        header["cols"] = matrix.shape[1]
        fh.write(header.tobytes())
        fh.write(matrix.tobytes())


def read_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, not a matrix file")
        header = np.frombuffer(fh.read(_HEADER.itemsize), dtype=_HEADER)[0]
        rows, cols = int(header["rows"]), int(header["cols"])
        data = np.frombuffer(fh.read(), dtype="<f4")
    if data.size != rows * cols:
        raise ValueError(
            f"{path}: expected {rows * cols} values, found {data.size}"
        )
    return data.reshape(rows, cols).astype(np.float64)


@dataclass(frozen=True)
class LabelRow:
    filename: str
    label: int
    circuit: int


def write_labels(path, rows: list[LabelRow]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["filename", "label", "circuit"])
        for row in rows:
            writer.writerow([row.filename, row.label, row.circuit])


def read_labels(path) -> list[LabelRow]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"filename", "label", "circuit"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"{path}: labels CSV must have columns {sorted(required)}")
        return [
            LabelRow(r["filename"], int(r["label"]), int(r["circuit"]))
            for r in reader
        ]


def write_feature_csv(path, rows: list[LabelRow], matrix: np.ndarray) -> None:
    """Feature CSV: label,circuit,f0..fD-1 with one row per instance."""
    if len(rows) != matrix.shape[0]:
        raise ValueError(
            f"{len(rows)} label rows but {matrix.shape[0]} matrix rows"
        )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["label", "circuit"] + [f"f{i}" for i in range(matrix.shape[1])]
        )
        for row, vec in zip(rows, matrix):
            writer.writerow([row.label, row.circuit] + [f"{v:.10g}" for v in vec])


def read_feature_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read a feature CSV, returning (labels, circuits, matrix)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["label", "circuit"]:
            raise ValueError(f"{path}: feature CSV must start with label,circuit")
        labels, circuits, values = [], [], []
        for fields in reader:
            labels.append(int(fields[0]))
            circuits.append(int(fields[1]))
            values.append([float(v) for v in fields[2:]])
    if not values:
        raise ValueError(f"{path}: feature CSV has no data rows")
    return (
        np.asarray(labels, dtype=np.int64),
        np.asarray(circuits, dtype=np.int64),
        np.asarray(values, dtype=np.float64),
    )
