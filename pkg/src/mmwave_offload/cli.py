"""Command-line experiment runner.

Usage:
    offload run <experiment> [--config file.toml] [--seed N] [--trials N]
                             [--out path] [--workers N] [--full]

Exit codes: 0 on success, 2 on configuration errors, 3 on numeric
failures inside a run.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError, OffloadError
from .experiments import EXPERIMENTS, run_experiment, validate_config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="offload",
        description="Reproduce the multi-link offloading experiments as CSV.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment and write its CSV")
    run.add_argument("experiment", choices=EXPERIMENTS)
    run.add_argument("--config", type=Path, help="TOML file with parameter overrides")
    run.add_argument("--seed", type=int, help="RNG seed (u64)")
    run.add_argument("--trials", type=int, help="Monte Carlo trial count")
    run.add_argument("--out", type=Path, help="output CSV path")
    run.add_argument("--workers", type=int, help="worker processes (default 1)")
    run.add_argument(
        "--full", action="store_true", default=None,
        help="use publication-scale trial counts",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    raw = ""
    if args.config is not None:
        try:
            raw = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            print(f"config: {exc}", file=sys.stderr)
            return 2
    overrides = {
        "seed": args.seed,
        "trials": args.trials,
        "out": None if args.out is None else str(args.out),
        "workers": args.workers,
        "full": args.full,
    }
    try:
        cfg = validate_config(raw, experiment=args.experiment, overrides=overrides)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config: {problem}", file=sys.stderr)
        return 2
    try:
        path = run_experiment(cfg)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config: {problem}", file=sys.stderr)
        return 2
    except OffloadError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    print(path)
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
