#!/usr/bin/env python3
"""Iterated-limit experiment: confined 3D runs against the limiting 2D NLS.

The reduced ground-mode field must approach the 2D solution as the
confinement stiffens; exit code 3 flags a non-monotone distance table.
"""

import argparse
import sys
import tempfile

from beclab.lab.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/dimred")
    ap.add_argument("--omegas", default="4,16,64")
    ap.add_argument("--t-final", type=float, default=0.5)
    ap.add_argument("--coupling", type=float, default=6.283185307179586)
    args = ap.parse_args()
    config = f"""[experiment]
kind = dimred3d
out = {args.out}
emit_plots = true

[params]
omega_list = {args.omegas}
t_final = {args.t_final}
coupling = {args.coupling}
"""
    with tempfile.NamedTemporaryFile("w", suffix=".ini", delete=False) as fh:
        fh.write(config)
        path = fh.name
    sys.exit(main(["run", "--config", path]))
