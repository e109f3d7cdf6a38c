"""Supersequence burst-molding defense simulator.

A site's traffic is modeled as a sequence of burst sizes; two paired sites
are molded toward the elementwise maximum of their sequences (the
supersequence). The simulator applies queue-then-flush padding: each real
burst's packets are buffered and released together, padded with dummies up
to the target size, once the detector's time threshold declares the burst
over. Target bursts with no real counterpart are appended as fake tail
bursts. Real packets are never dropped; bursts that overflow their target
are emitted as-is and flagged, since that mismatch is exactly what leaks to
a classifier.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .trace import (
    EmptyTraceError,
    OUTGOING,
    Packet,
    Trace,
    segment_bursts,
    segment_bursts_by_time,
)

DEFAULT_THRESHOLD = 0.3  # seconds


@dataclass(frozen=True)
class BurstSequence:
    """Per-burst packet counts; index parity encodes direction (even=outgoing)."""

    sizes: tuple[int, ...]

    def __post_init__(self):
        if any(s < 1 for s in self.sizes):
            raise ValueError(f"burst sizes must be >= 1, got {self.sizes}")

    def __len__(self) -> int:
        return len(self.sizes)

    def __getitem__(self, i: int) -> int:
        return self.sizes[i]


def burst_sequence_from_trace(
    trace: Trace, threshold: float | None = DEFAULT_THRESHOLD
) -> BurstSequence:
    """Derive a site's burst-size sequence from a trace.

    Uses the time-threshold detector (threshold=None falls back to pure
    direction segmentation). The trace must open with an outgoing burst:
    the half-duplex model always starts with the client request.
    """
    if len(trace) == 0:
        raise EmptyTraceError("cannot derive a burst sequence from an empty trace")
    if trace.packets[0].direction != OUTGOING:
        raise ValueError("trace must start with an outgoing packet (client request)")
    bursts = (
        segment_bursts(trace)
        if threshold is None
        else segment_bursts_by_time(trace, threshold)
    )
    return BurstSequence(tuple(b.size for b in bursts))


def supersequence(a: BurstSequence, b: BurstSequence) -> BurstSequence:
    """Elementwise maximum of two burst sequences (missing entries are 0)."""
    length = max(len(a), len(b))
    sizes = tuple(
        max(a[i] if i < len(a) else 0, b[i] if i < len(b) else 0)
        for i in range(length)
    )
    return BurstSequence(sizes)


@dataclass(frozen=True)
class MoldingPlan:
    target: BurstSequence
    real_sizes: tuple[int, ...]
    padding: tuple[int, ...]  # dummies added to each real burst
    overflow: tuple[bool, ...]  # real burst exceeded (or had no) target slot
    tail_sizes: tuple[int, ...]  # fake bursts appended after real traffic
    defended_sizes: tuple[int, ...]

    @property
    def leaked(self) -> bool:
        """True when molding could not match the target exactly."""
        return any(self.overflow)

    @property
    def total_dummies(self) -> int:
        return sum(self.padding) + sum(self.tail_sizes)


def mold_trace(
    real: Trace,
    target: BurstSequence,
    threshold: float = DEFAULT_THRESHOLD,
    fake_gap: float | None = None,
) -> tuple[Trace, MoldingPlan]:
    """Mold a real trace onto a target burst sequence.

    Each real burst (time-threshold segmentation) is flushed in full at its
    detection time (last packet + threshold) padded up to the target size.
    Leftover target bursts become fake tail bursts spaced fake_gap seconds
    apart (default: the trace's median inter-burst gap). Returns the
    defended trace and the plan that produced it.
    """
    if len(target) == 0:
        raise ValueError("target burst sequence is empty")
    if len(real) == 0:
        raise EmptyTraceError("cannot mold an empty trace")
    segments = segment_bursts_by_time(real, threshold)
    real_sizes = tuple(seg.size for seg in segments)

    padding: list[int] = []
    overflow: list[bool] = []
    packets: list[Packet] = []
    defended_sizes: list[int] = []
    for i, seg in enumerate(segments):
        slot = target[i] if i < len(target) else 0
        count = max(seg.size, slot)
        flush_at = seg.last + threshold
        packets.extend(Packet(flush_at, seg.direction) for _ in range(count))
        padding.append(count - seg.size)
        overflow.append(seg.size > slot)
        defended_sizes.append(count)

    if fake_gap is None:
        gaps = [b2.first - b1.last for b1, b2 in zip(segments, segments[1:])]
        fake_gap = float(np.median(gaps)) if gaps else threshold
    tail_sizes = tuple(target[j] for j in range(len(segments), len(target)))
    t = packets[-1].timestamp
    direction = segments[-1].direction
    for size in tail_sizes:
        t += fake_gap
        direction = -direction
        packets.extend(Packet(t, direction) for _ in range(size))

    defended = Trace(
        tuple(packets),
        site_label=real.site_label,
        instance_id=real.instance_id,
        circuit_id=real.circuit_id,
    )
    plan = MoldingPlan(
        target=target,
        real_sizes=real_sizes,
        padding=tuple(padding),
        overflow=tuple(overflow),
        tail_sizes=tail_sizes,
        defended_sizes=tuple(defended_sizes) + tail_sizes,
    )
    return defended, plan


def defended_burst_sizes(defended: Trace) -> tuple[int, ...]:
    """Burst sizes of a defended trace (flush bursts alternate direction)."""
    return tuple(b.size for b in segment_bursts(defended))


@dataclass(frozen=True)
class PairedVisit:
    visit_site: int
    decoy_site: int
    instance_id: int
    monitored_visit: bool  # False for the reverse (decoy-side) visit


def pair_sites(
    monitored: Sequence[int],
    nonsensitive: Sequence[int],
    samples: int,
    seed: int = 0,
) -> list[PairedVisit]:
    """Random (monitored, nonsensitive) pairing schedule.

    Every drawn pair yields two visits, one in each direction (the user may
    be on either side of the pairing). Instance ids count occurrences of
    the pair, so (visit, decoy, instance, side) tuples are unique even when
    the two id spaces overlap.
    """
    if not monitored or not nonsensitive:
        raise ValueError("both site lists must be non-empty")
    rng = np.random.default_rng(seed)
    counts: dict[tuple[int, int], int] = {}
    schedule: list[PairedVisit] = []
    for _ in range(samples):
        m = int(monitored[rng.integers(len(monitored))])
        n = int(nonsensitive[rng.integers(len(nonsensitive))])
        key = (m, n)
        instance = counts.get(key, 0)
        counts[key] = instance + 1
        schedule.append(PairedVisit(m, n, instance, True))
        schedule.append(PairedVisit(n, m, instance, False))
    return schedule


@dataclass(frozen=True)
class Overheads:
    bandwidth: float  # defended packets / real packets
    latency: float  # defended duration / real duration


def overheads(real: Trace, defended: Trace) -> Overheads:
    """Multiplicative packet and time overheads of a defended trace."""
    if len(real) == 0 or len(defended) == 0:
        raise EmptyTraceError("overheads need non-empty traces")
    bandwidth = len(defended) / len(real)
    latency = defended.duration / max(real.duration, 1e-9)
    return Overheads(bandwidth=bandwidth, latency=latency)


@dataclass(frozen=True)
class OverheadReport:
    bandwidth_mean: float
    bandwidth_std: float
    latency_mean: float
    latency_std: float
    count: int

    def to_dict(self) -> dict:
        return {
            "bandwidth_mean": self.bandwidth_mean,
            "bandwidth_std": self.bandwidth_std,
            "latency_mean": self.latency_mean,
            "latency_std": self.latency_std,
            "count": self.count,
        }


def overhead_report(pairs: Sequence[tuple[Trace, Trace]]) -> OverheadReport:
    """Mean and population standard deviation of overheads across a corpus."""
    if not pairs:
        raise ValueError("no trace pairs to report on")
    results = [overheads(real, defended) for real, defended in pairs]
    bw = np.array([r.bandwidth for r in results])
    lat = np.array([r.latency for r in results])
    return OverheadReport(
        bandwidth_mean=float(bw.mean()),
        bandwidth_std=float(bw.std()),
        latency_mean=float(lat.mean()),
        latency_std=float(lat.std()),
        count=len(results),
    )
