"""The DF convolutional network, built from a DfConfig."""

from __future__ import annotations

import torch
from torch import nn

from .config import DfConfig


def _activation(name: str) -> nn.Module:
    return nn.ELU() if name == "elu" else nn.ReLU()


class DfModel(nn.Module):
    def __init__(self, config: DfConfig, n_classes: int):
        super().__init__()
        self.config = config
        self.n_classes = n_classes
        layers: list[nn.Module] = []
        in_ch = 1
        length = config.input_length
        for block, filters in enumerate(config.conv_filters):
            act = config.first_block_activation if block == 0 else "relu"
            for _ in range(2):
                layers.append(
                    nn.Conv1d(in_ch, filters, config.kernel_size, padding="same")
                )
                if config.batch_norm:
                    layers.append(nn.BatchNorm1d(filters))
                layers.append(_activation(act))
                in_ch = filters
            pool = min(config.pool_size, length)
            if pool > 1:
                layers.append(nn.MaxPool1d(pool, stride=config.pool_stride))
                length = (length - pool) // config.pool_stride + 1
            layers.append(nn.Dropout(config.conv_dropout))
        self.features = nn.Sequential(*layers)

        flat = config.conv_filters[-1] * length
        dense: list[nn.Module] = []
        in_dim = flat
        for drop in config.dense_dropout:
            dense.append(nn.Linear(in_dim, config.dense_units))
            if config.batch_norm:
                dense.append(nn.BatchNorm1d(config.dense_units))
            dense.append(nn.ReLU())
            dense.append(nn.Dropout(drop))
            in_dim = config.dense_units
        dense.append(nn.Linear(in_dim, n_classes))
        self.classifier = nn.Sequential(*dense)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.ndim == 2:
            x = x[:, None, :]
        if x.shape[-1] != self.config.input_length:
            raise ValueError(
                f"input length {x.shape[-1]} does not match the configured "
                f"{self.config.input_length}"
            )
        return self.classifier(self.features(x).flatten(1))

    @torch.no_grad()
    def predict_proba(self, x: torch.Tensor) -> torch.Tensor:
        self.eval()
        return torch.softmax(self.forward(x), dim=1)


def build_model(config: DfConfig, n_classes: int) -> DfModel:
    torch.manual_seed(config.seed)
    return DfModel(config, n_classes)
