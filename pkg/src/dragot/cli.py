"""Command-line entry point.

Subcommands:
  run         execute one configuration, one evaluation CSV per seed
  compare     execute every configured variant on a shared instance
  slopes      fit log-log rate slopes on evaluation CSVs
  export-map  run on the unit ball and export banded map labels

See the README for the flat config format.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .experiments import (
    ConfigError,
    cmd_compare,
    cmd_export_map,
    cmd_run,
    cmd_slopes,
    load_config,
)


def _add_config_args(parser):
    parser.add_argument("--config", required=True, help="flat key-value config file")
    parser.add_argument("--seed", type=int, default=None, help="override solver.seed")
    parser.add_argument("--out", default=None, help="override output_dir")
    parser.add_argument("--threads", type=int, default=1, help="parallel workers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dragot")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "compare", "export-map"):
        _add_config_args(sub.add_parser(name))
    slopes = sub.add_parser("slopes")
    slopes.add_argument("csvs", nargs="+", help="evaluation CSV files")
    slopes.add_argument("--field", default="pot_err_sq")
    slopes.add_argument("--window", type=float, default=0.5)
    return parser


def _load(args):
    exp = load_config(args.config)
    if args.seed is not None:
        exp = replace(exp, solver=replace(exp.solver, seed=args.seed))
    if args.out is not None:
        exp = replace(exp, output_dir=args.out)
    return exp


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(_load(args), threads=args.threads)
        if args.command == "compare":
            return cmd_compare(_load(args), threads=args.threads)
        if args.command == "export-map":
            return cmd_export_map(_load(args), threads=args.threads)
        if args.command == "slopes":
            return cmd_slopes(args.csvs, args.field, args.window)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
