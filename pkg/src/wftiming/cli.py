"""Command-line pipelines: features, represent, split, knn, leakage, wt.

Every command is deterministic given its inputs and --seed, and records its
resolved configuration (and the package version) as config.json in the
output directory. Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import CorpusEntry, load_entry, read_corpus_manifest, scan_corpus
from .defense import (
    burst_sequence_from_trace,
    mold_trace,
    overhead_report,
    overheads,
    pair_sites,
    supersequence,
)
from .features import (
    DEFAULT_BINS,
    FeatureKind,
    build_bins_for_traces,
    extract_matrix,
    load_bins,
    save_bins,
)
from .knn import Distance, evaluate_closed, evaluate_open, fit
from .leakage import LeakageConfig, analyze_matrix
from .matrixio import (
    LabelRow,
    read_feature_csv,
    read_labels,
    read_matrix,
    write_feature_csv,
    write_labels,
    write_matrix,
)
from .represent import DEFAULT_LENGTH, Encoding, encode_matrix
from .splits import (
    build_index,
    load_time_stats,
    read_split_manifest,
    split_by_circuit,
    split_by_speed,
    write_split_manifest,
)
from .trace import EmptyTraceError, Trace, TraceParseError, UNMONITORED, save_trace


class CliError(Exception):
    """Data-level failure; maps to exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _read_config_file(path) -> dict[str, str]:
    out: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read config file: {exc}") from None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{line_no}: expected key = value")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _convert(value: str):
    lowered = value.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            continue
    return value


def _apply_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    """Fill defaults from a key=value config file; flags always win."""
    if not getattr(args, "config", None):
        return
    config = _read_config_file(args.config)
    for key, value in config.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            parser.error(f"config file sets unknown option {key!r}")
        if getattr(args, dest) == parser.get_default(dest):
            setattr(args, dest, _convert(value))


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_run_config(out: Path, args: argparse.Namespace) -> None:
    resolved = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in sorted(vars(args).items())
        if k not in ("func", "parser")
    }
    payload = {"tool": "wftiming", "version": __version__, "config": resolved}
    (out / "config.json").write_text(json.dumps(payload, indent=2), encoding="utf-8")


def _scan(args) -> list[CorpusEntry]:
    manifest = read_corpus_manifest(args.manifest) if args.manifest else None
    entries, skipped = scan_corpus(args.corpus, manifest)
    for name in skipped:
        print(f"skipping unrecognized file: {name}", file=sys.stderr)
    return entries


def _load_corpus(entries: list[CorpusEntry]) -> tuple[list[CorpusEntry], list[Trace]]:
    """Load traces, reporting per-file failures and continuing."""
    good_entries: list[CorpusEntry] = []
    traces: list[Trace] = []
    failures = 0
    for entry in entries:
        try:
            traces.append(load_entry(entry))
            good_entries.append(entry)
        except (TraceParseError, EmptyTraceError, OSError) as exc:
            failures += 1
            print(f"skipping {entry.filename}: {exc}", file=sys.stderr)
    if failures:
        print(f"skipped {failures} unreadable file(s)", file=sys.stderr)
    if not traces:
        raise CliError("no readable traces in the corpus")
    return good_entries, traces


def _label_rows(entries: list[CorpusEntry]) -> list[LabelRow]:
    return [
        LabelRow(e.filename, e.site_label, e.circuit_id) for e in entries
    ]


def _split_refs(
    entries: list[CorpusEntry], split_path, partition: str
) -> set[str]:
    assignment = read_split_manifest(split_path)
    for entry in entries:
        if entry.filename not in assignment:
            raise CliError(
                f"split manifest does not cover corpus file {entry.filename!r}"
            )
    return {ref for ref, part in assignment.items() if part == partition}


def cmd_features(args) -> int:
    out = _out_dir(args)
    entries, traces = _load_corpus(_scan(args))
    rows = _label_rows(entries)
    bin_counts = (
        list(range(args.sweep_from, args.sweep_to + 1, args.sweep_step))
        if args.bins_sweep
        else [args.bins]
    )
    if args.per_split and not args.split:
        raise CliError("--per-split requires --split")
    for b in bin_counts:
        suffix = f"_b{b}" if len(bin_counts) > 1 else ""
        if args.per_split:
            assignment = read_split_manifest(args.split)
            for part in ("train", "validation", "test"):
                keep = [
                    i
                    for i, e in enumerate(entries)
                    if assignment.get(e.filename) == part
                ]
                if not keep:
                    continue
                part_traces = [traces[i] for i in keep]
                bins = build_bins_for_traces(part_traces, b)
                matrix = extract_matrix(part_traces, bins)
                tag = f"_{part}{suffix}"
                save_bins(bins, out / f"bins{tag}.json")
                write_matrix(out / f"features{tag}.bin", matrix)
                part_rows = [rows[i] for i in keep]
                write_labels(out / f"labels{tag}.csv", part_rows)
                write_feature_csv(out / f"features{tag}.csv", part_rows, matrix)
        else:
            if args.split:
                train_refs = _split_refs(entries, args.split, "train")
                train_traces = [
                    t for e, t in zip(entries, traces) if e.filename in train_refs
                ]
                if not train_traces:
                    raise CliError("split manifest selects no training traces")
            else:
                train_traces = traces
            bins = build_bins_for_traces(train_traces, b)
            matrix = extract_matrix(traces, bins)
            save_bins(bins, out / f"bins{suffix}.json")
            write_matrix(out / f"features{suffix}.bin", matrix)
            write_labels(out / f"labels{suffix}.csv", rows)
            write_feature_csv(out / f"features{suffix}.csv", rows, matrix)
    _write_run_config(out, args)
    return 0


def cmd_represent(args) -> int:
    out = _out_dir(args)
    entries, traces = _load_corpus(_scan(args))
    encoding = Encoding(args.encoding)
    matrix = encode_matrix(traces, encoding, args.length)
    write_matrix(out / "repr.bin", matrix)
    write_labels(out / "labels.csv", _label_rows(entries))
    _write_run_config(out, args)
    return 0


def cmd_split(args) -> int:
    out = _out_dir(args)
    entries, traces = _load_corpus(_scan(args))
    index = build_index(
        [e.filename for e in entries],
        [e.site_label for e in entries],
        [e.circuit_id for e in entries],
        [t.duration for t in traces],
    )
    if args.speed:
        split = split_by_speed(index, args.speed, args.fraction)
    else:
        try:
            ratio = tuple(int(x) for x in args.ratio.split(":"))
        except ValueError:
            ratio = ()
        if len(ratio) != 3:
            raise CliError(f"--ratio must look like 8:1:1, got {args.ratio!r}")
        split = split_by_circuit(index, ratio, order=args.order, seed=args.seed)
    write_split_manifest(split, out / "split.csv")
    if args.stats:
        with open(out / "loadtimes.csv", "w", encoding="utf-8") as fh:
            fh.write("site,circuit,mean_load_time\n")
            for site in index.sites():
                for circuit, mean in load_time_stats(index, site):
                    fh.write(f"{site},{circuit},{mean:.6f}\n")
    _write_run_config(out, args)
    return 0


def cmd_knn(args) -> int:
    out = _out_dir(args)
    matrix = read_matrix(args.matrix)
    labels = read_labels(args.labels)
    if len(labels) != matrix.shape[0]:
        raise CliError(
            f"{args.labels}: {len(labels)} label rows for {matrix.shape[0]} matrix rows"
        )
    assignment = read_split_manifest(args.split)
    parts: dict[str, list[int]] = {"train": [], "validation": [], "test": []}
    for i, row in enumerate(labels):
        if row.filename not in assignment:
            raise CliError(f"split manifest does not cover {row.filename!r}")
        parts[assignment[row.filename]].append(i)
    if not parts["train"] or not parts["test"]:
        raise CliError("split leaves train or test empty")
    y = np.array([row.label for row in labels])
    train, test = parts["train"], parts["test"]
    model = fit(
        matrix[train], y[train], k=args.knn_k, distance=Distance(args.distance)
    )
    if args.open:
        result = evaluate_open(
            model, matrix[test], y[test], exact_site=not args.binary
        )
        payload = result.to_dict()
        with open(out / "pr_curve.csv", "w", encoding="utf-8") as fh:
            fh.write("threshold,precision,recall,tp,fp,fn\n")
            for p in result.curve:
                fh.write(
                    f"{p.threshold:.6f},{p.precision:.6f},{p.recall:.6f},"
                    f"{p.tp},{p.fp},{p.fn}\n"
                )
    else:
        payload = evaluate_closed(model, matrix[test], y[test]).to_dict()
    (out / "results.json").write_text(json.dumps(payload, indent=2), encoding="utf-8")
    _write_run_config(out, args)
    return 0


def cmd_leakage(args) -> int:
    out = _out_dir(args)
    labels, _, matrix = read_feature_csv(args.features)
    n_feat = matrix.shape[1]
    if args.bins:
        bins = load_bins(args.bins)
        b = next(iter(bins.values())).b
        if n_feat != len(FeatureKind) * b:
            raise CliError(
                f"{args.features}: {n_feat} columns do not match 8*b={8 * b}"
            )
        categories = {
            kind.name: list(range(i * b, (i + 1) * b))
            for i, kind in enumerate(FeatureKind)
        }
    elif args.columns_per_category:
        step = args.columns_per_category
        categories = {
            f"cat{ci}": list(range(lo, min(lo + step, n_feat)))
            for ci, lo in enumerate(range(0, n_feat, step))
        }
    else:
        categories = {"all": list(range(n_feat))}
    config = LeakageConfig(mc_samples=args.mc_samples, seed=args.seed)
    report = analyze_matrix(matrix, labels, categories, config)
    (out / "leakage.json").write_text(
        json.dumps(report.to_dict(), indent=2), encoding="utf-8"
    )
    with open(out / "individual.csv", "w", encoding="utf-8") as fh:
        fh.write("feature,category,bits,degenerate\n")
        for i, bits in enumerate(report.feature_bits):
            fh.write(
                f"{i},{report.feature_category[i]},{bits:.6f},"
                f"{int(report.degenerate[i])}\n"
            )
    with open(out / "joint.csv", "w", encoding="utf-8") as fh:
        fh.write("category,bits\n")
        for name, bits in sorted(report.category_bits.items()):
            fh.write(f"{name},{bits:.6f}\n")
    with open(out / "redundancy.csv", "w", encoding="utf-8") as fh:
        fh.write("removed,matched,score\n")
        for removed, matched, score in report.removed:
            fh.write(f"{removed},{matched},{score:.6f}\n")
    with open(out / "clusters.csv", "w", encoding="utf-8") as fh:
        fh.write("cluster,feature\n")
        for ci, cluster in enumerate(report.clusters):
            for col in cluster:
                fh.write(f"{ci},{col}\n")
        for col in report.independents:
            fh.write(f"independent,{col}\n")
    _write_run_config(out, args)
    return 0


def _site_table(entries: list[CorpusEntry]) -> dict[int, list[CorpusEntry]]:
    """site -> instances; bare-numbered (unmonitored) files are 1-file sites."""
    table: dict[int, list[CorpusEntry]] = {}
    for entry in entries:
        key = entry.instance_id if entry.site_label == UNMONITORED else entry.site_label
        table.setdefault(key, []).append(entry)
    return table


def cmd_wt(args) -> int:
    out = _out_dir(args)
    threshold = args.threshold_ms / 1000.0
    entries, traces = _load_corpus(_scan(args))
    mon_table: dict[int, list[Trace]] = {}
    for entry, trace in zip(entries, traces):
        if entry.site_label != UNMONITORED:
            mon_table.setdefault(entry.site_label, []).append(trace)
    if not mon_table:
        raise CliError("corpus has no monitored sites to defend")
    decoy_manifest = (
        read_corpus_manifest(args.decoy_manifest) if args.decoy_manifest else None
    )
    decoy_scan, skipped = scan_corpus(args.decoys, decoy_manifest)
    for name in skipped:
        print(f"skipping unrecognized decoy file: {name}", file=sys.stderr)
    decoy_entries, decoy_traces = _load_corpus(decoy_scan)
    decoy_table: dict[int, list[Trace]] = {}
    for entry, trace in zip(decoy_entries, decoy_traces):
        key = (
            entry.instance_id
            if entry.site_label == UNMONITORED
            else entry.site_label
        )
        decoy_table.setdefault(key, []).append(trace)

    schedule = pair_sites(
        sorted(mon_table), sorted(decoy_table), args.samples, seed=args.seed
    )
    # The per-site database sequence W-T would ship: the first instance's bursts.
    mon_db = {s: burst_sequence_from_trace(ts[0], threshold) for s, ts in mon_table.items()}
    decoy_db = {
        s: burst_sequence_from_trace(ts[0], threshold) for s, ts in decoy_table.items()
    }

    defended_dir = out / "defended"
    defended_dir.mkdir(parents=True, exist_ok=True)
    visit_counter: dict[int, int] = {}
    unmon_counter = 0
    manifest_rows: list[tuple[str, str, int]] = []
    plans: list[dict] = []
    report_pairs: list[tuple[Trace, Trace]] = []
    for k, visit in enumerate(schedule):
        from_monitored = visit.monitored_visit
        visit_db = mon_db if from_monitored else decoy_db
        other_db = decoy_db if from_monitored else mon_db
        instances = (mon_table if from_monitored else decoy_table)[visit.visit_site]
        real = instances[visit.instance_id % len(instances)]
        target = supersequence(
            visit_db[visit.visit_site], other_db[visit.decoy_site]
        )
        defended, plan = mold_trace(real, target, threshold)
        if from_monitored:
            n = visit_counter.get(visit.visit_site, 0)
            visit_counter[visit.visit_site] = n + 1
            name = f"{visit.visit_site}-{n}"
            label = str(visit.visit_site)
        else:
            name = str(unmon_counter)
            unmon_counter += 1
            label = "unmonitored"
        save_trace(defended, defended_dir / name)
        manifest_rows.append((name, label, k))
        report_pairs.append((real, defended))
        plans.append(
            {
                "file": name,
                "visit_site": visit.visit_site,
                "decoy_site": visit.decoy_site,
                "monitored_visit": from_monitored,
                "real_sizes": list(plan.real_sizes),
                "target": list(plan.target.sizes),
                "padding": list(plan.padding),
                "tail_sizes": list(plan.tail_sizes),
                "overflow": list(plan.overflow),
                "leaked": plan.leaked,
            }
        )
    with open(defended_dir / "manifest.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("filename,site_label,circuit_id\n")
        for name, label, circuit in manifest_rows:
            fh.write(f"{name},{label},{circuit}\n")
    (out / "plans.json").write_text(json.dumps(plans, indent=2), encoding="utf-8")
    report = overhead_report(report_pairs)
    (out / "overheads.json").write_text(
        json.dumps(report.to_dict(), indent=2), encoding="utf-8"
    )
    with open(out / "overheads.csv", "w", encoding="utf-8") as fh:
        fh.write("filename,bandwidth,latency\n")
        for (real, defended), row in zip(report_pairs, manifest_rows):
            ov = overheads(real, defended)
            fh.write(f"{row[0]},{ov.bandwidth:.6f},{ov.latency:.6f}\n")
    _write_run_config(out, args)
    return 0


def main(argv=None) -> int:
    parser = _Parser(prog="wftiming", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="key=value config file; flags override it")
        p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("features", help="extract timing-feature histograms")
    p.add_argument("--corpus", required=True)
    p.add_argument("--manifest", help="sidecar CSV: filename,site_label,circuit_id")
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument(
        "--bins-sweep", action="store_true", help="emit one output per bin count"
    )
    p.add_argument("--sweep-from", type=int, default=5)
    p.add_argument("--sweep-to", type=int, default=50)
    p.add_argument("--sweep-step", type=int, default=5)
    p.add_argument("--split", help="split manifest: build bins on train only")
    p.add_argument(
        "--per-split",
        action="store_true",
        help="build bins separately per partition of --split instead",
    )
    common(p)
    p.set_defaults(func=cmd_features, parser=p)

    p = sub.add_parser("represent", help="fixed-length trace encodings")
    p.add_argument("--corpus", required=True)
    p.add_argument("--manifest")
    p.add_argument(
        "--encoding",
        required=True,
        choices=[e.value for e in Encoding],
    )
    p.add_argument("--length", type=int, default=DEFAULT_LENGTH)
    common(p)
    p.set_defaults(func=cmd_represent, parser=p)

    p = sub.add_parser("split", help="circuit-aware dataset splitting")
    p.add_argument("--corpus", required=True)
    p.add_argument("--manifest")
    p.add_argument("--ratio", default="8:1:1")
    p.add_argument("--order", choices=["id", "random"], default="id")
    p.add_argument("--speed", choices=["slowest", "fastest"])
    p.add_argument("--fraction", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stats", action="store_true", help="emit loadtimes.csv")
    common(p)
    p.set_defaults(func=cmd_split, parser=p)

    p = sub.add_parser("knn", help="k-NN attack evaluation")
    p.add_argument("--matrix", required=True, help="features/representation .bin")
    p.add_argument("--labels", required=True, help="parallel labels CSV")
    p.add_argument("--split", required=True, help="split manifest CSV")
    p.add_argument("--knn-k", type=int, default=3)
    p.add_argument(
        "--distance",
        choices=[d.value for d in Distance],
        default=Distance.EUCLIDEAN.value,
    )
    p.add_argument("--open", action="store_true", help="open-world PR evaluation")
    p.add_argument(
        "--binary",
        action="store_true",
        help="open world: score monitored-vs-unmonitored instead of exact site",
    )
    common(p)
    p.set_defaults(func=cmd_knn, parser=p)

    p = sub.add_parser("leakage", help="information-leakage analysis")
    p.add_argument("--features", required=True, help="feature CSV (label,circuit,f*)")
    p.add_argument("--bins", help="bins.json defining the 8-kind column layout")
    p.add_argument("--columns-per-category", type=int)
    p.add_argument("--mc-samples", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_leakage, parser=p)

    p = sub.add_parser("wt", help="burst-molding defense simulation")
    p.add_argument("--corpus", required=True, help="monitored sites")
    p.add_argument("--manifest")
    p.add_argument("--decoys", required=True, help="decoy (nonsensitive) corpus")
    p.add_argument("--decoy-manifest")
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--threshold-ms", type=float, default=300.0)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_wt, parser=p)

    args = parser.parse_args(argv)
    _apply_config(args, args.parser)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TraceParseError, EmptyTraceError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
