#!/usr/bin/env python3
"""Tabulate the admissible-region exponent v(beta) and its four branches."""

import argparse
import sys
import tempfile
from pathlib import Path

from beclab.lab.cli import main


def run(out: str, points: int) -> int:
    config = f"""[experiment]
kind = scaling-table
out = {out}
emit_plots = true

[params]
points = {points}
"""
    with tempfile.NamedTemporaryFile("w", suffix=".ini", delete=False) as fh:
        fh.write(config)
        path = fh.name
    return main(["run", "--config", path])


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/scaling-table")
    ap.add_argument("--points", type=int, default=1000)
    args = ap.parse_args()
    Path(args.out).mkdir(parents=True, exist_ok=True)
    sys.exit(run(args.out, args.points))
