"""Synthetic trace corpora for experiments and self-tests.

Each synthetic site gets a characteristic burst-size/timing signature so
that classifiers have real signal to find; circuits scale all timings to
mimic slow and fast paths.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .trace import INCOMING, OUTGOING, Packet, Trace, save_trace


def make_trace(
    rng: np.random.Generator,
    burst_sizes: list[int],
    gap_scale: float = 0.2,
    intra_gap: float = 0.01,
) -> Trace:
    """Build an alternating-burst trace (outgoing first) from burst sizes."""
    t = 0.0
    direction = OUTGOING
    packets: list[Packet] = []
    for size in burst_sizes:
        for _ in range(size):
            packets.append(Packet(round(t, 6), direction))
            t += intra_gap * (0.75 + 0.5 * rng.random())
        t += gap_scale * (0.75 + 0.5 * rng.random())
        direction = INCOMING if direction == OUTGOING else OUTGOING
    return Trace(tuple(packets))


def site_burst_profile(rng: np.random.Generator, site: int) -> list[int]:
    """A stable per-site burst signature with mild instance jitter."""
    profile_rng = np.random.default_rng(site + 1000)
    n_bursts = int(profile_rng.integers(16, 30))
    base = profile_rng.integers(1, 12, size=n_bursts)
    jitter = rng.integers(0, 2, size=n_bursts)
    return [int(max(1, b + j)) for b, j in zip(base, jitter)]


def make_site_trace(
    rng: np.random.Generator, site: int, circuit_speed: float = 1.0
) -> Trace:
    sizes = site_burst_profile(rng, site)
    # Per-site timing scales dominate the circuit-speed variation so the
    # synthetic sites stay separable across circuit splits.
    gap = 0.04 * (1 + site % 9) * circuit_speed
    intra = 0.002 * (1 + site % 5) * circuit_speed
    return make_trace(rng, sizes, gap_scale=gap, intra_gap=intra)


def write_corpus(
    directory,
    sites: int,
    circuits: int,
    instances_per_circuit: int,
    seed: int = 0,
    unmonitored: int = 0,
) -> Path:
    """Write a labeled synthetic corpus plus its manifest CSV.

    Monitored files follow the `<site>-<instance>` convention, unmonitored
    files are bare instance numbers; `manifest.csv` carries circuit ids.
    Returns the manifest path.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    rows: list[tuple[str, str, int]] = []

    def circuit_speed(circuit: int) -> float:
        # Mild spread: enough for the speed-split experiments to rank
        # circuits, small enough that site signatures transfer across them.
        return 0.9 + 0.2 * circuit / max(circuits - 1, 1)

    for site in range(sites):
        instance = 0
        for circuit in range(circuits):
            for _ in range(instances_per_circuit):
                trace = make_site_trace(rng, site, circuit_speed(circuit))
                name = f"{site}-{instance}"
                save_trace(trace, directory / name)
                rows.append((name, str(site), circuit))
                instance += 1
    for k in range(unmonitored):
        circuit = k % max(circuits, 1)
        trace = make_site_trace(rng, 10_000 + k, circuit_speed(circuit))
        name = str(k)
        save_trace(trace, directory / name)
        rows.append((name, "unmonitored", circuit))
    manifest = directory / "manifest.csv"
    with open(manifest, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["filename", "site_label", "circuit_id"])
        writer.writerows(rows)
    return manifest
