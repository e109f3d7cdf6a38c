"""Dataset directory scanning and the trace corpus index.

Dataset convention: monitored traces are files named `<site>-<instance>`
(e.g. `12-305`), unmonitored traces are named `<instance>`. Circuit ids come
from an optional sidecar manifest CSV with columns filename,site_label,
circuit_id; without one, every visit is treated as its own circuit.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path

from .trace import Trace, UNMONITORED, load_trace

_MONITORED = re.compile(r"^(\d+)-(\d+)$")
_UNMONITORED = re.compile(r"^(\d+)$")


@dataclass(frozen=True)
class CorpusEntry:
    path: Path
    filename: str
    site_label: int
    instance_id: int
    circuit_id: int


def parse_trace_filename(name: str) -> tuple[int, int] | None:
    """Map a dataset filename to (site_label, instance_id), or None."""
    m = _MONITORED.match(name)
    if m:
        return int(m.group(1)), int(m.group(2))
    m = _UNMONITORED.match(name)
    if m:
        return UNMONITORED, int(m.group(1))
    return None


def read_corpus_manifest(path) -> dict[str, tuple[int, int]]:
    """Read a sidecar manifest CSV: filename -> (site_label, circuit_id)."""
    out: dict[str, tuple[int, int]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"filename", "site_label", "circuit_id"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(
                f"{path}: manifest must have columns {sorted(required)}"
            )
        for row in reader:
            label_txt = row["site_label"].strip()
            label = UNMONITORED if label_txt == "unmonitored" else int(label_txt)
            out[row["filename"]] = (label, int(row["circuit_id"]))
    return out


def scan_corpus(
    directory, manifest: dict[str, tuple[int, int]] | None = None
) -> tuple[list[CorpusEntry], list[str]]:
    """List the corpus directory deterministically.

    Returns (entries, skipped filenames). Files whose names match neither
    the dataset convention nor the manifest are skipped, not fatal.
    Without circuit information each visit becomes its own circuit.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise ValueError(f"{directory}: not a directory")
    entries: list[CorpusEntry] = []
    skipped: list[str] = []
    names = sorted(p.name for p in directory.iterdir() if p.is_file())
    for idx, name in enumerate(names):
        parsed = parse_trace_filename(name)
        manifest_row = manifest.get(name) if manifest else None
        if parsed is None and manifest_row is None:
            skipped.append(name)
            continue
        site = manifest_row[0] if manifest_row else parsed[0]
        circuit = manifest_row[1] if manifest_row else idx
        instance = parsed[1] if parsed else idx
        entries.append(
            CorpusEntry(
                path=directory / name,
                filename=name,
                site_label=site,
                instance_id=instance,
                circuit_id=circuit,
            )
        )
    if not entries:
        raise ValueError(f"{directory}: no trace files found")
    return entries, skipped


def load_entry(entry: CorpusEntry) -> Trace:
    return load_trace(
        entry.path,
        site_label=entry.site_label,
        instance_id=entry.instance_id,
        circuit_id=entry.circuit_id,
    )
