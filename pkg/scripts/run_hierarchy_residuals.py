#!/usr/bin/env python3
"""Hierarchy-identity residuals with dt/dx refinement (expect a x4 drop)."""

import argparse
import sys
import tempfile

from beclab.lab.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/hierarchy")
    ap.add_argument("--family", choices=("bbgky", "gp2d"), default="bbgky")
    args = ap.parse_args()
    n = 8 if args.family == "bbgky" else 32
    L = 4.0 if args.family == "bbgky" else 8.0
    config = f"""[experiment]
kind = hierarchy-residual
out = {args.out}

[params]
family = {args.family}
n = {n}
L = {L}
"""
    with tempfile.NamedTemporaryFile("w", suffix=".ini", delete=False) as fh:
        fh.write(config)
        path = fh.name
    sys.exit(main(["run", "--config", path]))
