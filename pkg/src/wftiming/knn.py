"""k-nearest-neighbor classification with closed- and open-world evaluation.

Labels are integers; the background (unmonitored) class is UNMONITORED (-1)
and may appear in training. Prediction confidence is the fraction of the k
neighbors agreeing with the plurality label, which is what the open-world
threshold sweep tunes over.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .trace import UNMONITORED


class Distance(Enum):
    EUCLIDEAN = "euclidean"
    MANHATTAN = "manhattan"


@dataclass(frozen=True)
class KnnModel:
    X: np.ndarray
    y: np.ndarray
    k: int
    distance: Distance = Distance.EUCLIDEAN


def fit(
    X: np.ndarray,
    y: Sequence[int],
    k: int,
    distance: Distance = Distance.EUCLIDEAN,
) -> KnnModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2:
        raise ValueError(f"training matrix must be 2-D, got shape {X.shape}")
    if len(y) != X.shape[0]:
        raise ValueError(f"{X.shape[0]} rows but {len(y)} labels")
    if not np.all(np.isfinite(X)):
        raise ValueError("training matrix contains non-finite values")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > X.shape[0]:
        raise ValueError(f"k={k} exceeds the {X.shape[0]} training rows")
    return KnnModel(X=X, y=y, k=k, distance=distance)


def _distances(model: KnnModel, queries: np.ndarray) -> np.ndarray:
    # Direct differences (not the |q|^2+|x|^2-2qx expansion): equal true
    # distances must compare equal so neighbor ties resolve by index, exactly
    # as a straightforward reimplementation would resolve them.
    out = np.empty((queries.shape[0], model.X.shape[0]))
    step = max(1, int(2**22 // max(model.X.size, 1)))
    for lo in range(0, queries.shape[0], step):
        diff = queries[lo : lo + step, None, :] - model.X[None, :, :]
        if model.distance is Distance.EUCLIDEAN:
            out[lo : lo + step] = np.sqrt((diff * diff).sum(axis=2))
        else:
            out[lo : lo + step] = np.abs(diff).sum(axis=2)
    return out


def _plurality(labels: np.ndarray, dists: np.ndarray) -> tuple[int, float]:
    """Plurality label among the neighbors with its agreement fraction.

    Count ties break toward the smaller summed distance, then the smaller
    label.
    """
    candidates: dict[int, list[float]] = {}
    for lab, d in zip(labels, dists):
        candidates.setdefault(int(lab), []).append(float(d))
    best = min(
        candidates.items(),
        key=lambda item: (-len(item[1]), sum(item[1]), item[0]),
    )
    return best[0], len(best[1]) / len(labels)


def predict(model: KnnModel, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Predict labels and plurality confidences for a batch of queries."""
    queries = np.asarray(queries, dtype=np.float64)
    single = queries.ndim == 1
    if single:
        queries = queries[None, :]
    if queries.shape[1] != model.X.shape[1]:
        raise ValueError(
            f"query dimension {queries.shape[1]} != model dimension {model.X.shape[1]}"
        )
    dists = _distances(model, queries)
    # Stable argsort makes equal-distance neighbors resolve by training index.
    order = np.argsort(dists, axis=1, kind="stable")[:, : model.k]
    labels = np.empty(queries.shape[0], dtype=np.int64)
    confidences = np.empty(queries.shape[0], dtype=np.float64)
    for i, idx in enumerate(order):
        labels[i], confidences[i] = _plurality(model.y[idx], dists[i, idx])
    return labels, confidences


def predict_closed(model: KnnModel, queries: np.ndarray) -> np.ndarray:
    labels, _ = predict(model, queries)
    return labels


@dataclass(frozen=True)
class ClosedEval:
    accuracy: float
    labels: tuple[int, ...]
    confusion: np.ndarray  # rows = true labels, columns = predictions

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "labels": list(self.labels),
            "confusion": self.confusion.tolist(),
        }


def evaluate_closed(
    model: KnnModel, X_test: np.ndarray, y_test: Sequence[int]
) -> ClosedEval:
    y_test = np.asarray(y_test, dtype=np.int64)
    if len(y_test) == 0:
        raise ValueError("empty test set")
    pred = predict_closed(model, X_test)
    labels = tuple(sorted(set(y_test.tolist()) | set(pred.tolist())))
    pos = {lab: i for i, lab in enumerate(labels)}
    confusion = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for t, p in zip(y_test, pred):
        confusion[pos[int(t)], pos[int(p)]] += 1
    accuracy = float(np.mean(pred == y_test))
    return ClosedEval(accuracy=accuracy, labels=labels, confusion=confusion)


@dataclass(frozen=True)
class PRPoint:
    threshold: float
    precision: float
    recall: float
    tp: int
    fp: int
    fn: int

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "precision": self.precision,
            "recall": self.recall,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
        }


@dataclass(frozen=True)
class OpenEval:
    curve: tuple[PRPoint, ...]
    tuned_precision: PRPoint
    tuned_recall: PRPoint

    def to_dict(self) -> dict:
        return {
            "curve": [p.to_dict() for p in self.curve],
            "tuned_precision": self.tuned_precision.to_dict(),
            "tuned_recall": self.tuned_recall.to_dict(),
        }


def evaluate_open(
    model: KnnModel,
    X_test: np.ndarray,
    y_test: Sequence[int],
    thresholds: Sequence[float] | None = None,
    exact_site: bool = True,
) -> OpenEval:
    """Sweep the confidence threshold and report the precision-recall curve.

    A prediction counts as positive when it names a monitored site with
    confidence >= threshold. With exact_site=True (the default) a true
    positive additionally requires the predicted site to match the true one;
    exact_site=False scores the binary monitored-vs-unmonitored decision.
    Returns the curve plus the precision- and recall-maximizing points.
    """
    y_test = np.asarray(y_test, dtype=np.int64)
    if len(y_test) == 0:
        raise ValueError("empty test set")
    n_monitored = int(np.sum(y_test != UNMONITORED))
    if n_monitored == 0:
        raise ValueError("open-world evaluation needs monitored test instances")
    pred, conf = predict(model, X_test)
    if thresholds is None:
        thresholds = [i / model.k for i in range(model.k + 1)]
    curve = []
    for t in sorted(thresholds):
        positive = (pred != UNMONITORED) & (conf >= t)
        if exact_site:
            tp = int(np.sum(positive & (pred == y_test) & (y_test != UNMONITORED)))
        else:
            tp = int(np.sum(positive & (y_test != UNMONITORED)))
        fp = int(np.sum(positive)) - tp
        fn = n_monitored - tp
        precision = tp / (tp + fp) if tp + fp else 1.0
        recall = tp / n_monitored
        curve.append(
            PRPoint(
                threshold=float(t),
                precision=precision,
                recall=recall,
                tp=tp,
                fp=fp,
                fn=fn,
            )
        )
    tuned_p = max(curve, key=lambda p: (p.precision, p.recall))
    tuned_r = max(curve, key=lambda p: (p.recall, p.precision))
    return OpenEval(curve=tuple(curve), tuned_precision=tuned_p, tuned_recall=tuned_r)
