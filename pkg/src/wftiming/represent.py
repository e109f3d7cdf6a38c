"""Fixed-length classifier input encodings of a trace."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np

from .trace import EmptyTraceError, Trace

DEFAULT_LENGTH = 5000


class Encoding(Enum):
    DIRECTION = "direction"
    RAW_TIMING = "raw-timing"
    DIRECTIONAL_TIME = "directional-time"


@dataclass(frozen=True)
class Representation:
    encoding: Encoding
    values: np.ndarray


def encode(
    trace: Trace, encoding: Encoding, length: int = DEFAULT_LENGTH
) -> Representation:
    """Encode a trace as a fixed-length vector.

    The first min(|trace|, length) entries encode packets in order; longer
    traces are truncated and shorter ones zero-padded. DIRECTION entries are
    the +/-1 signs, RAW_TIMING the timestamps, and DIRECTIONAL_TIME their
    elementwise product.
    """
    if len(trace) == 0:
        raise EmptyTraceError("cannot encode an empty trace")
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    out = np.zeros(length, dtype=np.float64)
    k = min(len(trace), length)
    if encoding is Encoding.DIRECTION:
        out[:k] = trace.directions[:k]
    elif encoding is Encoding.RAW_TIMING:
        out[:k] = trace.timestamps[:k]
    elif encoding is Encoding.DIRECTIONAL_TIME:
        out[:k] = trace.directions[:k] * trace.timestamps[:k]
    else:  # pragma: no cover - closed enum
        raise ValueError(f"unknown encoding {encoding}")
    return Representation(encoding=encoding, values=out)


def encode_matrix(
    traces: Iterable[Trace], encoding: Encoding, length: int = DEFAULT_LENGTH
) -> np.ndarray:
    rows = [encode(t, encoding, length).values for t in traces]
    if not rows:
        raise ValueError("no traces to encode")
    return np.vstack(rows)
