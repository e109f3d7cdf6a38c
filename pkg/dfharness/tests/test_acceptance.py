"""Acceptance: the input-variant config contracts and the overfit check."""

import time

import numpy as np
import torch
from torch import nn

from dfharness.config import DfConfig, InputKind
from dfharness.model import build_model
from dfharness.train import train

from test_config_and_model import conv_activations
from test_train_eval import LENGTH, toy_dataset


def test_secondary_acceptance():
    t0 = time.perf_counter()

    direction = build_model(DfConfig.for_input(InputKind.DIRECTION, 400), 5)
    assert conv_activations(direction)[:2] == ["ELU", "ELU"]
    assert any(isinstance(m, nn.BatchNorm1d) for m in direction.modules())

    raw = build_model(DfConfig.for_input(InputKind.RAW_TIMING, 400), 5)
    assert conv_activations(raw) == ["ReLU"] * 8
    assert not any(isinstance(m, nn.BatchNorm1d) for m in raw.modules())

    assert DfConfig.for_input(InputKind.FEATURES_160).epochs == 100

    proba = direction.predict_proba(torch.randn(12, 400))
    assert np.allclose(proba.sum(dim=1).numpy(), 1.0, atol=1e-5)

    X, y = toy_dataset()
    config = DfConfig.for_input(InputKind.DIRECTION, input_length=LENGTH)
    config = DfConfig(**{**config.__dict__, "epochs": 100, "batch_size": 16})
    result = train(config, X, y, stop_at_train_accuracy=1.0)
    assert result.final_train_accuracy == 1.0
    assert result.history[-1]["epoch"] <= 100

    print(
        "ACCEPTANCE PASS: DF harness config contracts + toy overfit "
        f"({time.perf_counter() - t0:.2f}s)"
    )
