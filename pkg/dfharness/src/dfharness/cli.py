"""Train/evaluate entry point over exported matrices.

    dfharness train --matrix repr.bin --labels labels.csv --input-kind direction
    dfharness evaluate --checkpoint out/model.pt --matrix test.bin --labels test.csv
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import DfConfig, InputKind
from .data import load_dataset
from .evaluate import evaluate_closed, evaluate_open
from .train import load_checkpoint, train


def cmd_train(args) -> int:
    X, y = load_dataset(args.matrix, args.labels)
    kind = InputKind(args.input_kind)
    config = DfConfig.for_input(kind, input_length=X.shape[1])
    if args.epochs:
        config = DfConfig(**{**config.__dict__, "epochs": args.epochs})
    result = train(config, X, y, out_dir=args.out)
    last = result.history[-1]
    print(json.dumps({"epochs_run": last["epoch"], "train_acc": last["train_acc"]}))
    return 0


def cmd_evaluate(args) -> int:
    model, codec = load_checkpoint(args.checkpoint)
    X, y = load_dataset(args.matrix, args.labels)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.open:
        curve = evaluate_open(model, codec, X, y)
        with open(out / "pr_curve.csv", "w", encoding="utf-8") as fh:
            fh.write("threshold,precision,recall,tp,fp,fn\n")
            for p in curve:
                fh.write(
                    f"{p.threshold:.6f},{p.precision:.6f},{p.recall:.6f},"
                    f"{p.tp},{p.fp},{p.fn}\n"
                )
        payload = {"curve": len(curve)}
    else:
        payload = {"accuracy": evaluate_closed(model, codec, X, y)}
    (out / "results.json").write_text(json.dumps(payload, indent=2))
    print(json.dumps(payload))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="dfharness", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train")
    p.add_argument("--matrix", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument(
        "--input-kind", required=True, choices=[k.value for k in InputKind]
    )
    p.add_argument("--epochs", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--matrix", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--open", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
