"""Regenerate the data behind every figure into one directory per figure.

    python scripts/reproduce_all.py --out-dir results --runs 10
"""

import argparse
import sys
from pathlib import Path

from chhard import cli


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out-dir", type=Path, default=Path("results"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    args = p.parse_args()
    for fig in cli.FIGURES:
        argv = ["reproduce", fig, "--seed", str(args.seed), "--runs", str(args.runs)]
        argv += ["--out-dir", str(args.out_dir / fig), "--format", args.format]
        rc = cli.main(argv)
        print(f"{fig}: exit {rc}")
        if rc:
            return rc
    return 0


if __name__ == "__main__":
    sys.exit(main())
