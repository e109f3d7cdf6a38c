"""Model configuration for the Deep Fingerprinting (DF) CNN variants.

The base architecture follows the published DF model: eight 1-D
convolutional layers in four blocks (each block ends with max pooling and
0.1 dropout), two dense layers with heavy dropout, and a softmax
classification layer. Input-dependent variants adjust activations, batch
normalization, dropout, and epochs; kernel/pool/optimizer settings are
inherited from the DF reference implementation.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class InputKind(Enum):
    DIRECTION = "direction"
    DIRECTIONAL_TIME = "directional-time"
    RAW_TIMING = "raw-timing"
    FEATURES_160 = "features-160"


@dataclass(frozen=True)
class DfConfig:
    input_kind: InputKind
    input_length: int = 5000
    epochs: int = 30
    # activation of the first conv block ("elu" handles negative inputs)
    first_block_activation: str = "elu"
    batch_norm: bool = True
    dense_dropout: tuple[float, float] = (0.70, 0.50)
    conv_filters: tuple[int, ...] = (32, 64, 128, 256)
    kernel_size: int = 8
    pool_size: int = 8
    pool_stride: int = 4
    conv_dropout: float = 0.1
    dense_units: int = 512
    batch_size: int = 128
    learning_rate: float = 0.002
    seed: int = 0

    @classmethod
    def for_input(cls, kind: InputKind, input_length: int | None = None) -> "DfConfig":
        """The per-input hyperparameter variant.

        Direction and directional-time inputs contain negative values, so
        the first two conv layers use ELU; batch norm stays on and the
        dense dropout is 0.70/0.50 over 30 epochs. Raw timing is
        non-negative: ReLU throughout, no batch norm anywhere, and dense
        dropout reduced to 0.40. The 160-wide histogram features need the
        longer 100-epoch schedule.
        """
        if kind in (InputKind.DIRECTION, InputKind.DIRECTIONAL_TIME):
            return cls(input_kind=kind, input_length=input_length or 5000)
        if kind is InputKind.RAW_TIMING:
            return cls(
                input_kind=kind,
                input_length=input_length or 5000,
                first_block_activation="relu",
                batch_norm=False,
                dense_dropout=(0.40, 0.40),
            )
        if kind is InputKind.FEATURES_160:
            return cls(
                input_kind=kind,
                input_length=input_length or 160,
                epochs=100,
            )
        raise ValueError(f"unknown input kind {kind}")
