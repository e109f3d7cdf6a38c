"""Training loop with per-epoch metric logging and checkpointing."""

from __future__ import annotations

import csv
import dataclasses
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .config import DfConfig, InputKind
from .model import DfModel, build_model


class LabelCodec:
    """Maps dataset labels (including -1 background) to class indices."""

    def __init__(self, labels: np.ndarray):
        self.classes = np.array(sorted(set(labels.tolist())), dtype=np.int64)
        self._index = {int(c): i for i, c in enumerate(self.classes)}

    def encode(self, labels: np.ndarray) -> np.ndarray:
        try:
            return np.array([self._index[int(l)] for l in labels], dtype=np.int64)
        except KeyError as exc:
            raise ValueError(f"label {exc} not seen during training") from None

    def decode(self, idx: np.ndarray) -> np.ndarray:
        return self.classes[idx]


@dataclasses.dataclass
class TrainResult:
    model: DfModel
    codec: LabelCodec
    history: list[dict]  # per-epoch loss/accuracy rows
    final_train_accuracy: float


def _check_inputs(config: DfConfig, X: np.ndarray, y: np.ndarray) -> None:
    if X.ndim != 2 or X.shape[1] != config.input_length:
        raise ValueError(
            f"matrix shape {X.shape} does not match configured input length "
            f"{config.input_length}"
        )
    if len(y) != X.shape[0]:
        raise ValueError(f"{len(y)} labels for {X.shape[0]} rows")


def _epoch_pass(model, loader, loss_fn, optimizer=None) -> tuple[float, float]:
    """One pass over the loader; accuracy is always measured in eval mode.

    With the heavy dense dropout the train-mode running accuracy never
    settles, so each epoch's accuracy comes from a separate no-dropout pass.
    """
    total_loss = 0.0
    count = 0
    if optimizer is not None:
        model.train()
        for xb, yb in loader:
            loss = loss_fn(model(xb), yb)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total_loss += float(loss.detach()) * len(yb)
            count += len(yb)
    model.eval()
    correct = 0
    eval_count = 0
    with torch.no_grad():
        for xb, yb in loader:
            logits = model(xb)
            if optimizer is None:
                total_loss += float(loss_fn(logits, yb)) * len(yb)
                count += len(yb)
            correct += int((logits.argmax(dim=1) == yb).sum())
            eval_count += len(yb)
    return total_loss / count, correct / eval_count


def train(
    config: DfConfig,
    X_train: np.ndarray,
    y_train: np.ndarray,
    X_val: np.ndarray | None = None,
    y_val: np.ndarray | None = None,
    out_dir: str | Path | None = None,
    stop_at_train_accuracy: float | None = None,
) -> TrainResult:
    """Train a DF model; optionally checkpoint and log metrics to out_dir."""
    _check_inputs(config, X_train, y_train)
    if X_val is not None:
        _check_inputs(config, X_val, np.asarray(y_val))
    codec = LabelCodec(np.asarray(y_train))
    model = build_model(config, n_classes=len(codec.classes))
    torch.manual_seed(config.seed)

    def loader(X, y, shuffle):
        ds = torch.utils.data.TensorDataset(
            torch.as_tensor(X, dtype=torch.float32),
            torch.as_tensor(codec.encode(np.asarray(y))),
        )
        generator = torch.Generator().manual_seed(config.seed)
        return torch.utils.data.DataLoader(
            ds, batch_size=config.batch_size, shuffle=shuffle, generator=generator
        )

    train_loader = loader(X_train, y_train, shuffle=True)
    val_loader = loader(X_val, y_val, shuffle=False) if X_val is not None else None
    optimizer = torch.optim.Adamax(model.parameters(), lr=config.learning_rate)
    loss_fn = nn.CrossEntropyLoss()

    history: list[dict] = []
    train_acc = 0.0
    for epoch in range(1, config.epochs + 1):
        train_loss, train_acc = _epoch_pass(model, train_loader, loss_fn, optimizer)
        row = {"epoch": epoch, "train_loss": train_loss, "train_acc": train_acc}
        if val_loader is not None:
            val_loss, val_acc = _epoch_pass(model, val_loader, loss_fn)
            row.update(val_loss=val_loss, val_acc=val_acc)
        history.append(row)
        if stop_at_train_accuracy is not None and train_acc >= stop_at_train_accuracy:
            break

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_checkpoint(out / "model.pt", model, codec)
        with open(out / "history.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(history[0].keys()))
            writer.writeheader()
            writer.writerows(history)
    return TrainResult(
        model=model, codec=codec, history=history, final_train_accuracy=train_acc
    )


def save_checkpoint(path, model: DfModel, codec: LabelCodec) -> None:
    config = dataclasses.asdict(model.config)
    config["input_kind"] = model.config.input_kind.value
    torch.save(
        {
            "state_dict": model.state_dict(),
            "config": config,
            "classes": codec.classes.tolist(),
        },
        path,
    )


def load_checkpoint(path) -> tuple[DfModel, LabelCodec]:
    payload = torch.load(path, weights_only=False)
    raw = dict(payload["config"])
    raw["input_kind"] = InputKind(raw["input_kind"])
    raw["conv_filters"] = tuple(raw["conv_filters"])
    raw["dense_dropout"] = tuple(raw["dense_dropout"])
    config = DfConfig(**raw)
    codec = LabelCodec(np.asarray(payload["classes"]))
    model = build_model(config, n_classes=len(codec.classes))
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, codec
