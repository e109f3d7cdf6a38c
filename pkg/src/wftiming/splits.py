"""Circuit-aware dataset splitting and circuit-speed experiment splits."""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

PARTITIONS = ("train", "validation", "test")


@dataclass(frozen=True)
class IndexEntry:
    ref: str
    site_label: int
    circuit_id: int
    page_load_time: float


@dataclass(frozen=True)
class CorpusIndex:
    """Per-trace metadata needed for splitting; load time is the last timestamp."""

    entries: tuple[IndexEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def circuits(self) -> list[int]:
        return sorted({e.circuit_id for e in self.entries})

    def sites(self) -> list[int]:
        return sorted({e.site_label for e in self.entries})


def build_index(
    refs: Sequence[str],
    site_labels: Sequence[int],
    circuit_ids: Sequence[int],
    load_times: Sequence[float],
) -> CorpusIndex:
    if not len(refs) == len(site_labels) == len(circuit_ids) == len(load_times):
        raise ValueError("index columns differ in length")
    return CorpusIndex(
        tuple(
            IndexEntry(r, int(s), int(c), float(t))
            for r, s, c, t in zip(refs, site_labels, circuit_ids, load_times)
        )
    )


@dataclass(frozen=True)
class Split:
    train: tuple[str, ...]
    validation: tuple[str, ...]
    test: tuple[str, ...]

    def assignments(self) -> dict[str, str]:
        out: dict[str, str] = {}
        for part in PARTITIONS:
            for ref in getattr(self, part):
                out[ref] = part
        return out

    def partition_sizes(self) -> tuple[int, int, int]:
        return len(self.train), len(self.validation), len(self.test)


def allocate_circuit_counts(n: int, ratio: tuple[int, int, int]) -> tuple[int, int, int]:
    """Number of circuits per partition for an a:b:c split of n circuits.

    Train takes round(n*a/(a+b+c)), validation floors its share of the
    remainder and test takes the rest (so 40 circuits at 8:1:1 give 32/4/4
    and 36 give 29/3/4), with every partition guaranteed at least one
    circuit.
    """
    a, b, c = ratio
    if min(a, b, c) <= 0:
        raise ValueError(f"ratio parts must be positive, got {ratio}")
    if n < 3:
        raise ValueError(f"need at least 3 circuits to split, got {n}")
    n_train = int(round(n * a / (a + b + c)))
    rest = n - n_train
    n_val = int(rest * b / (b + c))
    n_test = rest - n_val
    counts = [n_train, n_val, n_test]
    # Feasibility floor: steal from the largest until all partitions non-empty.
    while min(counts) < 1:
        counts[counts.index(max(counts))] -= 1
        counts[counts.index(min(counts))] += 1
    return counts[0], counts[1], counts[2]


def split_by_circuit(
    index: CorpusIndex,
    ratio: tuple[int, int, int] = (8, 1, 1),
    order: Literal["id", "random"] = "id",
    seed: int | None = None,
) -> Split:
    """Assign whole circuits contiguously to train/validation/test.

    Circuits are taken in id order by default (matching batch-collected
    datasets); order="random" shuffles them first with the given seed for
    corpora whose circuit ids carry no meaning. Instances follow their
    circuit, so the partition circuit sets are mutually exclusive.
    """
    circuits = index.circuits()
    n_train, n_val, _ = allocate_circuit_counts(len(circuits), ratio)
    if order == "random":
        rng = np.random.default_rng(seed)
        circuits = list(rng.permutation(circuits))
    train_set = set(circuits[:n_train])
    val_set = set(circuits[n_train : n_train + n_val])
    parts: dict[str, list[str]] = {p: [] for p in PARTITIONS}
    for entry in index.entries:
        if entry.circuit_id in train_set:
            parts["train"].append(entry.ref)
        elif entry.circuit_id in val_set:
            parts["validation"].append(entry.ref)
        else:
            parts["test"].append(entry.ref)
    return Split(
        tuple(parts["train"]), tuple(parts["validation"]), tuple(parts["test"])
    )


def load_time_stats(index: CorpusIndex, site: int) -> list[tuple[int, float]]:
    """Mean page load time per circuit for one site, slowest last.

    Sorted ascending by mean with ties broken by circuit id.
    """
    by_circuit: dict[int, list[float]] = {}
    for entry in index.entries:
        if entry.site_label == site:
            by_circuit.setdefault(entry.circuit_id, []).append(entry.page_load_time)
    if not by_circuit:
        raise ValueError(f"site {site} not present in the corpus index")
    means = [(cid, float(np.mean(ts))) for cid, ts in by_circuit.items()]
    means.sort(key=lambda item: (item[1], item[0]))
    return means


def split_by_speed(
    index: CorpusIndex,
    which: Literal["slowest", "fastest"],
    fraction: float = 0.1,
) -> Split:
    """Per site, hold out the extreme-speed circuits as the test set.

    Circuits are ranked by their mean page load time over the site's
    instances; the selected fraction (slowest or fastest) becomes the test
    set and the remaining circuits are split evenly between train and
    validation, alternating along the speed ranking so both cover the full
    range. Rankings are computed independently per site.
    """
    if which not in ("slowest", "fastest"):
        raise ValueError(f"which must be 'slowest' or 'fastest', got {which!r}")
    if not 0 < fraction < 1:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    assignment: dict[tuple[int, int], str] = {}
    for site in index.sites():
        ranked = [cid for cid, _ in load_time_stats(index, site)]
        k = int(round(fraction * len(ranked)))
        if k == 0:
            raise ValueError(
                f"fraction {fraction} selects zero of {len(ranked)} circuits "
                f"for site {site}"
            )
        test_circuits = ranked[-k:] if which == "slowest" else ranked[:k]
        rest = [cid for cid in ranked if cid not in set(test_circuits)]
        for cid in test_circuits:
            assignment[(site, cid)] = "test"
        for pos, cid in enumerate(rest):
            assignment[(site, cid)] = "train" if pos % 2 == 0 else "validation"
    parts: dict[str, list[str]] = {p: [] for p in PARTITIONS}
    for entry in index.entries:
        parts[assignment[(entry.site_label, entry.circuit_id)]].append(entry.ref)
    return Split(
        tuple(parts["train"]), tuple(parts["validation"]), tuple(parts["test"])
    )


@dataclass(frozen=True)
class SpeedGapStats:
    """Fastest/slowest mean circuit load times per site and the median gap."""

    per_site: dict[int, tuple[float, float]] = field(default_factory=dict)

    @property
    def median_gap(self) -> float:
        gaps = [slow - fast for fast, slow in self.per_site.values()]
        return float(statistics.median(gaps))


def speed_gap_stats(index: CorpusIndex) -> SpeedGapStats:
    per_site: dict[int, tuple[float, float]] = {}
    for site in index.sites():
        means = [m for _, m in load_time_stats(index, site)]
        per_site[site] = (means[0], means[-1])
    return SpeedGapStats(per_site=per_site)


def write_split_manifest(split: Split, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["filename", "partition"])
        for part in PARTITIONS:
            for ref in getattr(split, part):
                writer.writerow([ref, part])


def read_split_manifest(path) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"filename", "partition"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"{path}: split manifest needs columns {sorted(required)}")
        for row in reader:
            part = row["partition"]
            if part not in PARTITIONS:
                raise ValueError(f"{path}: unknown partition {part!r}")
            out[row["filename"]] = part
    if not out:
        raise ValueError(f"{path}: split manifest is empty")
    return out


def check_circuit_exclusive(index: CorpusIndex, split: Split) -> None:
    """Raise if any circuit id lands in more than one partition."""
    assignment = split.assignments()
    seen: dict[int, str] = {}
    for entry in index.entries:
        part = assignment[entry.ref]
        prev = seen.setdefault(entry.circuit_id, part)
        if prev != part:
            raise AssertionError(
                f"circuit {entry.circuit_id} appears in both {prev} and {part}"
            )
