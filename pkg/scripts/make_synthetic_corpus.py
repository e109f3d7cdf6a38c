#!/usr/bin/env python3
"""Generate a labeled synthetic trace corpus for pipeline experiments."""

import argparse

from wftiming.synthetic import write_corpus


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("directory")
    parser.add_argument("--sites", type=int, default=5)
    parser.add_argument("--circuits", type=int, default=3)
    parser.add_argument("--instances-per-circuit", type=int, default=4)
    parser.add_argument("--unmonitored", type=int, default=0)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    manifest = write_corpus(
        args.directory,
        sites=args.sites,
        circuits=args.circuits,
        instances_per_circuit=args.instances_per_circuit,
        unmonitored=args.unmonitored,
        seed=args.seed,
    )
    print(f"wrote corpus with manifest {manifest}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
