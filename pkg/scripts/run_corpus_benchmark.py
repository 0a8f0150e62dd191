#!/usr/bin/env python3
"""Run the closure-probability grid over the synthetic corpus and print it."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from graspkit.cli import cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sigmas", default="0.02,0.05,0.1")
    parser.add_argument("--trials", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--sigma-mode", choices=["absolute", "relative"], default="relative")
    parser.add_argument("--output", default="benchmark_grid.csv")
    args = parser.parse_args()

    code = cli_main(
        [
            "benchmark",
            "--corpus", "standard",
            "--sigmas", args.sigmas,
            "--trials", str(args.trials),
            "--seed", str(args.seed),
            "--sigma-mode", args.sigma_mode,
            "--output", args.output,
        ]
    )
    if code != 0:
        return code
    text = Path(args.output).read_text()
    for line in text.splitlines():
        cells = line.split(",")
        print(f"{cells[0]:24s} " + "  ".join(f"{c:>10s}" for c in cells[1:]))
    print(f"\nwrote {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
