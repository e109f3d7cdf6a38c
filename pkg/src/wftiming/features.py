"""Burst-level timing features and global equal-frequency histogram vectors.

Eight value streams are extracted per trace. Three describe single bursts
(median packet time, variance, burst length) and five describe consecutive
burst pairs (inter-median delay and four inter-burst delays). Each stream
is histogrammed against bin edges built from a global training distribution
so that every trace maps to a fixed-length vector of 8*b entries in [0, 1].
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

from .trace import Burst, EmptyTraceError, INCOMING, OUTGOING, Trace, segment_bursts

DEFAULT_BINS = 20


class FeatureKind(Enum):
    """The eight burst-level timing feature streams, in vector-layout order."""

    MED = "med"
    VARIANCE = "variance"
    BURST_LENGTH = "burst_length"
    IMD = "imd"
    IBD_FF = "ibd_ff"
    IBD_LF = "ibd_lf"
    IBD_IFF = "ibd_iff"
    IBD_OFF = "ibd_off"


def extract_values(trace: Trace, kind: FeatureKind) -> np.ndarray:
    """Extract the raw value stream of one feature kind from a trace.

    Per-burst kinds yield one value per burst; pairwise kinds yield one
    value per consecutive (same-direction, for IBD-IFF/IBD-OFF) burst pair
    and an empty array when there are too few bursts.
    """
    if len(trace) == 0:
        raise EmptyTraceError("cannot extract features from an empty trace")
    bursts = segment_bursts(trace)
    return values_from_bursts(bursts, kind)


def values_from_bursts(bursts: list[Burst], kind: FeatureKind) -> np.ndarray:
    if kind is FeatureKind.MED:
        vals = [b.median() for b in bursts]
    elif kind is FeatureKind.VARIANCE:
        vals = [b.variance() for b in bursts]
    elif kind is FeatureKind.BURST_LENGTH:
        vals = [b.length() for b in bursts]
    elif kind is FeatureKind.IMD:
        vals = [b2.median() - b1.median() for b1, b2 in zip(bursts, bursts[1:])]
    elif kind is FeatureKind.IBD_FF:
        vals = [b2.first - b1.first for b1, b2 in zip(bursts, bursts[1:])]
    elif kind is FeatureKind.IBD_LF:
        vals = [b2.first - b1.last for b1, b2 in zip(bursts, bursts[1:])]
    elif kind is FeatureKind.IBD_IFF:
        incoming = [b for b in bursts if b.direction == INCOMING]
        vals = [b2.first - b1.first for b1, b2 in zip(incoming, incoming[1:])]
    elif kind is FeatureKind.IBD_OFF:
        outgoing = [b for b in bursts if b.direction == OUTGOING]
        vals = [b2.first - b1.first for b1, b2 in zip(outgoing, outgoing[1:])]
    else:  # pragma: no cover - closed enum
        raise ValueError(f"unknown feature kind {kind}")
    return np.asarray(vals, dtype=np.float64)


@dataclass(frozen=True)
class GlobalBins:
    """Equal-frequency bin edges for one feature kind.

    Edges are values of the sorted global array: edges[0] is the minimum and
    edges[k] is the largest value assigned to bin k, so bin k covers
    (edges[k-1], edges[k]] with the first bin closed on the left. Bin widths
    are generally unequal; out-of-range values clamp into the end bins.
    """

    kind: FeatureKind
    edges: np.ndarray
    b: int

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.float64)
        object.__setattr__(self, "edges", edges)
        if self.b < 1:
            raise ValueError("bin count must be >= 1")
        if len(edges) != self.b + 1:
            raise ValueError(f"expected {self.b + 1} edges, got {len(edges)}")
        if np.any(np.diff(edges) < 0):
            raise ValueError("bin edges must be non-decreasing")

    def bin_indices(self, values: np.ndarray) -> np.ndarray:
        # Interior edges only: values beyond either end land in the end bins.
        return np.searchsorted(self.edges[1:-1], values, side="left")


def build_global_bins(
    values: Iterable[float], b: int, kind: FeatureKind
) -> GlobalBins:
    """Split the pooled, sorted value array into b equal-count bins.

    Each bin receives floor(n/b) or ceil(n/b) of the n values (earlier bins
    take the remainder), which holds exactly for distinct values and
    best-effort under ties.
    """
    data = np.sort(np.asarray(list(values), dtype=np.float64))
    n = len(data)
    if n == 0:
        raise ValueError(f"no values to bin for {kind.name}")
    if b < 1:
        raise ValueError(f"bin count must be >= 1, got {b}")
    if b > n:
        raise ValueError(f"cannot build {b} bins from {n} values for {kind.name}")
    counts = [len(chunk) for chunk in np.array_split(data, b)]
    uppers = data[np.cumsum(counts) - 1]
    edges = np.concatenate(([data[0]], uppers))
    return GlobalBins(kind=kind, edges=edges, b=b)


def instance_histogram(values: np.ndarray, bins: GlobalBins) -> np.ndarray:
    """Histogram one instance's values against global edges, normalized to [0,1].

    Counts are divided by the instance's total value count for this kind, so
    in-range data sums to 1. Empty input yields the all-zero histogram.
    """
    values = np.asarray(values, dtype=np.float64)
    if len(values) == 0:
        return np.zeros(bins.b, dtype=np.float64)
    counts = np.bincount(bins.bin_indices(values), minlength=bins.b)
    return counts / len(values)


def feature_vector_length(b: int) -> int:
    return len(FeatureKind) * b


def extract_feature_vector(
    trace: Trace, bin_set: Mapping[FeatureKind, GlobalBins]
) -> np.ndarray:
    """Concatenate per-kind histograms into the 8*b feature vector."""
    b = _common_bin_count(bin_set)
    if len(trace) == 0:
        raise EmptyTraceError("cannot extract features from an empty trace")
    bursts = segment_bursts(trace)
    parts = [
        instance_histogram(values_from_bursts(bursts, kind), bin_set[kind])
        for kind in FeatureKind
    ]
    vector = np.concatenate(parts)
    assert len(vector) == feature_vector_length(b)
    return vector


def _common_bin_count(bin_set: Mapping[FeatureKind, GlobalBins]) -> int:
    missing = [k.name for k in FeatureKind if k not in bin_set]
    if missing:
        raise ValueError(f"bin set is missing feature kinds: {', '.join(missing)}")
    counts = {bin_set[k].b for k in FeatureKind}
    if len(counts) != 1:
        raise ValueError(f"bin set mixes bin counts: {sorted(counts)}")
    return counts.pop()


def build_bins_for_traces(
    traces: Iterable[Trace], b: int = DEFAULT_BINS
) -> dict[FeatureKind, GlobalBins]:
    """Build the global distribution bins for every kind from a trace corpus.

    The corpus should normally be the training partition; the resulting bins
    are then reused for validation and test extraction.
    """
    pooled: dict[FeatureKind, list[np.ndarray]] = {k: [] for k in FeatureKind}
    count = 0
    for trace in traces:
        count += 1
        bursts = segment_bursts(trace)
        for kind in FeatureKind:
            vals = values_from_bursts(bursts, kind)
            if len(vals):
                pooled[kind].append(vals)
    if count == 0:
        raise ValueError("no traces supplied for bin construction")
    bins: dict[FeatureKind, GlobalBins] = {}
    for kind in FeatureKind:
        if not pooled[kind]:
            raise ValueError(
                f"corpus yields no {kind.name} values; "
                "need traces with enough bursts"
            )
        bins[kind] = build_global_bins(np.concatenate(pooled[kind]), b, kind)
    return bins


def extract_matrix(
    traces: Iterable[Trace], bin_set: Mapping[FeatureKind, GlobalBins]
) -> np.ndarray:
    rows = [extract_feature_vector(t, bin_set) for t in traces]
    if not rows:
        raise ValueError("no traces to extract")
    return np.vstack(rows)


def save_bins(bin_set: Mapping[FeatureKind, GlobalBins], path) -> None:
    b = _common_bin_count(bin_set)
    payload = {
        "format": "wftiming-bins",
        "b": b,
        "edges": {k.name: bin_set[k].edges.tolist() for k in FeatureKind},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)


def load_bins(path) -> dict[FeatureKind, GlobalBins]:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != "wftiming-bins":
        raise ValueError(f"{path}: not a bins file")
    b = int(payload["b"])
    return {
        FeatureKind[name]: GlobalBins(FeatureKind[name], np.asarray(edges), b)
        for name, edges in payload["edges"].items()
    }
