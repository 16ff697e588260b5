#!/usr/bin/env python3
"""Confinement-loss norm exponents and the delta-approximation trace rate."""

import argparse
import sys
import tempfile
from pathlib import Path

from beclab.lab.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/norms")
    args = ap.parse_args()
    codes = []
    for kind in ("sobolev-sharpness", "mollifier-rate"):
        config = f"[experiment]\nkind = {kind}\nout = {Path(args.out) / kind}\nemit_plots = true\n"
        with tempfile.NamedTemporaryFile("w", suffix=".ini", delete=False) as fh:
            fh.write(config)
            path = fh.name
        codes.append(main(["run", "--config", path]))
    sys.exit(max(codes))
