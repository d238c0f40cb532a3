"""Command line entry point: `mixpar run <config> [options]`.

Exit codes: 0 pass, 1 rate-threshold failure, 2 usage/config error,
3 solver failure.  The RUN_SEED environment variable is reserved and
ignored by the deterministic paths.
"""
from __future__ import annotations

import argparse
import sys

from .config import ConfigParseError, load_config
from .runner import run_experiment


def main(argv=None):
    parser = argparse.ArgumentParser(prog="mixpar")
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="execute a refinement study")
    runp.add_argument("config", help="key=value or JSON config file")
    runp.add_argument("--jobs", type=int, default=None,
                      help="levels to run concurrently (1 = deterministic)")
    runp.add_argument("--vtk-every", type=int, default=None,
                      help="write a VTK snapshot every m-th step")
    runp.add_argument("--out", default=None, help="output directory")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        if args.jobs is not None:
            if args.jobs < 1:
                raise ConfigParseError("--jobs must be >= 1")
            cfg.jobs = args.jobs
        if args.vtk_every is not None:
            cfg.vtk_every = args.vtk_every
        if args.out is not None:
            cfg.out = args.out
    except ConfigParseError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2

    return run_experiment(cfg)


if __name__ == "__main__":
    sys.exit(main())
