#!/usr/bin/env python3
"""Run the degenerate eddy-current refinement study and print the rates."""
import argparse
import json
import sys
from pathlib import Path

from mixpar.config import load_config
from mixpar.runner import run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=Path(__file__).parent.parent / "configs" / "eddy2d.json")
    ap.add_argument("--out", default="out-eddy2d")
    ap.add_argument("--levels", type=int, default=None)
    ap.add_argument("--vtk-every", type=int, default=0)
    args = ap.parse_args()

    cfg = load_config(args.config)
    cfg.out = args.out
    cfg.vtk_every = args.vtk_every
    if args.levels is not None:
        cfg.levels = args.levels
    code = run_experiment(cfg)
    summary = json.loads((Path(cfg.out) / "summary.json").read_text())
    print(json.dumps({"rates": summary["rates"], "passed": summary["passed"]}, indent=2))
    return code


if __name__ == "__main__":
    sys.exit(main())
