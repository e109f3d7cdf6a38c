"""Closed- and open-world evaluation with the shared positive/negative rules.

These definitions mirror the feature-pipeline classifier exactly: a positive
is a monitored-site prediction whose confidence (max softmax probability)
clears the threshold; with exact_site=True a true positive additionally
requires the right site. Precision is TP/(TP+FP) (1.0 when no positives),
recall is TP over the number of monitored test instances.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch

from .data import UNMONITORED
from .model import DfModel
from .train import LabelCodec


def predict(
    model: DfModel, codec: LabelCodec, X: np.ndarray, batch_size: int = 256
) -> tuple[np.ndarray, np.ndarray]:
    """Predicted original labels and softmax confidences."""
    labels = []
    confidences = []
    for lo in range(0, len(X), batch_size):
        proba = model.predict_proba(
            torch.as_tensor(X[lo : lo + batch_size], dtype=torch.float32)
        ).numpy()
        idx = proba.argmax(axis=1)
        labels.append(codec.decode(idx))
        confidences.append(proba[np.arange(len(idx)), idx])
    return np.concatenate(labels), np.concatenate(confidences)


def evaluate_closed(
    model: DfModel, codec: LabelCodec, X: np.ndarray, y: Sequence[int]
) -> float:
    y = np.asarray(y)
    if len(y) == 0:
        raise ValueError("empty test set")
    pred, _ = predict(model, codec, X)
    return float(np.mean(pred == y))


@dataclass(frozen=True)
class PRPoint:
    threshold: float
    precision: float
    recall: float
    tp: int
    fp: int
    fn: int


def evaluate_open(
    model: DfModel,
    codec: LabelCodec,
    X: np.ndarray,
    y: Sequence[int],
    thresholds: Sequence[float] | None = None,
    exact_site: bool = True,
) -> list[PRPoint]:
    y = np.asarray(y)
    if len(y) == 0:
        raise ValueError("empty test set")
    n_monitored = int(np.sum(y != UNMONITORED))
    if n_monitored == 0:
        raise ValueError("open-world evaluation needs monitored test instances")
    pred, conf = predict(model, codec, X)
    if thresholds is None:
        thresholds = np.linspace(0.0, 1.0, 21)
    curve = []
    for t in sorted(float(t) for t in thresholds):
        positive = (pred != UNMONITORED) & (conf >= t)
        if exact_site:
            tp = int(np.sum(positive & (pred == y) & (y != UNMONITORED)))
        else:
            tp = int(np.sum(positive & (y != UNMONITORED)))
        fp = int(np.sum(positive)) - tp
        fn = n_monitored - tp
        curve.append(
            PRPoint(
                threshold=t,
                precision=tp / (tp + fp) if tp + fp else 1.0,
                recall=tp / n_monitored,
                tp=tp,
                fp=fp,
                fn=fn,
            )
        )
    return curve
