"""Packet traces, parsing, and burst segmentation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple

import numpy as np

OUTGOING = 1
INCOMING = -1

#: Site label used for background (unmonitored) traffic throughout the toolkit.
UNMONITORED = -1


class TraceParseError(ValueError):
    """Raised when a trace file line cannot be parsed."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class EmptyTraceError(ValueError):
    """Raised when an operation requires a non-empty trace."""


class Packet(NamedTuple):
    timestamp: float
    direction: int


@dataclass(frozen=True)
class Trace:
    """An ordered, direction-signed packet sequence for one page visit.

    Timestamps are seconds relative to the first packet (so traces produced
    by :func:`parse_trace` always start at 0.0) and must be non-decreasing.
    """

    packets: tuple[Packet, ...]
    site_label: int | None = None
    instance_id: int | None = None
    circuit_id: int | None = None

    def __len__(self) -> int:
        return len(self.packets)

    @cached_property
    def timestamps(self) -> np.ndarray:
        return np.array([p.timestamp for p in self.packets], dtype=np.float64)

    @cached_property
    def directions(self) -> np.ndarray:
        return np.array([p.direction for p in self.packets], dtype=np.int64)

    @property
    def duration(self) -> float:
        """Page load time: timestamp of the last packet (origin is at 0)."""
        if not self.packets:
            raise EmptyTraceError("empty trace has no duration")
        return self.packets[-1].timestamp


@dataclass(frozen=True)
class Burst:
    """A maximal same-direction run of packets with their timestamps."""

    direction: int
    timestamps: tuple[float, ...]

    @property
    def size(self) -> int:
        return len(self.timestamps)

    @property
    def first(self) -> float:
        return self.timestamps[0]

    @property
    def last(self) -> float:
        return self.timestamps[-1]

    def median(self) -> float:
        return float(np.median(self.timestamps))

    def variance(self) -> float:
        # Population variance (divide by burst size).
        return float(np.var(self.timestamps))

    def length(self) -> float:
        return self.timestamps[-1] - self.timestamps[0]


def _parse_direction(token: str) -> int:
    try:
        value = float(token)
    except ValueError:
        raise ValueError(f"direction {token!r} is not a number") from None
    if value not in (1.0, -1.0):
        raise ValueError(f"direction must be 1 or -1, got {token!r}")
    return OUTGOING if value > 0 else INCOMING


def parse_trace(
    text: str | Iterable[str],
    *,
    site_label: int | None = None,
    instance_id: int | None = None,
    circuit_id: int | None = None,
) -> Trace:
    """Parse `timestamp<TAB>direction` lines into a normalized Trace.

    Timestamps are shifted so the first packet sits at 0.0. Blank lines are
    ignored. Raises TraceParseError (with the line number) on malformed
    input and EmptyTraceError when no packets are present.
    """
    lines = text.splitlines() if isinstance(text, str) else text
    stamps: list[float] = []
    dirs: list[int] = []
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 2:
            raise TraceParseError(
                f"expected 'timestamp<TAB>direction', got {raw!r}", line_no
            )
        try:
            stamp = float(fields[0])
        except ValueError:
            raise TraceParseError(f"bad timestamp {fields[0]!r}", line_no) from None
        if not math.isfinite(stamp):
            raise TraceParseError(f"non-finite timestamp {fields[0]!r}", line_no)
        try:
            direction = _parse_direction(fields[1])
        except ValueError as exc:
            raise TraceParseError(str(exc), line_no) from None
        if stamps and stamp < stamps[-1]:
            raise TraceParseError(
                f"timestamps must be non-decreasing ({stamp} < {stamps[-1]})", line_no
            )
        stamps.append(stamp)
        dirs.append(direction)
    if not stamps:
        raise EmptyTraceError("trace file contains no packets")
    origin = stamps[0]
    packets = tuple(Packet(t - origin, d) for t, d in zip(stamps, dirs))
    return Trace(
        packets,
        site_label=site_label,
        instance_id=instance_id,
        circuit_id=circuit_id,
    )


def serialize_trace(trace: Trace) -> str:
    """Inverse of parse_trace for normalized traces (exact float round-trip)."""
    return "".join(f"{p.timestamp!r}\t{p.direction}\n" for p in trace.packets)


def load_trace(path, **metadata) -> Trace:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return parse_trace(fh, **metadata)
        except (TraceParseError, EmptyTraceError) as exc:
            raise type(exc)(f"{path}: {exc}") from None


def save_trace(trace: Trace, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_trace(trace))


def segment_bursts(trace: Trace) -> list[Burst]:
    """Split a trace into maximal same-direction bursts.

    The bursts partition the trace and consecutive bursts alternate
    direction. An empty trace yields an empty list.
    """
    bursts: list[Burst] = []
    run: list[float] = []
    run_dir = 0
    for pkt in trace.packets:
        if run and pkt.direction != run_dir:
            bursts.append(Burst(run_dir, tuple(run)))
            run = []
        run.append(pkt.timestamp)
        run_dir = pkt.direction
    if run:
        bursts.append(Burst(run_dir, tuple(run)))
    return bursts


def segment_bursts_by_time(trace: Trace, threshold: float) -> list[Burst]:
    """Segment bursts by direction change or inter-packet gap > threshold.

    This is the detector model used by the burst-molding simulator: a burst
    is considered over once the flow pauses longer than the threshold, even
    if the direction has not flipped. threshold=inf reduces to
    segment_bursts.
    """
    if not threshold > 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    bursts: list[Burst] = []
    run: list[float] = []
    run_dir = 0
    for pkt in trace.packets:
        if run and (pkt.direction != run_dir or pkt.timestamp - run[-1] > threshold):
            bursts.append(Burst(run_dir, tuple(run)))
            run = []
        run.append(pkt.timestamp)
        run_dir = pkt.direction
    if run:
        bursts.append(Burst(run_dir, tuple(run)))
    return bursts
