"""Command-line entry point: ``run``, ``check`` and ``sweep-dims``."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .checks import run_checks
from .config import load_config
from .experiment import run_experiment, summarize, sweep_dims, write_csv

__all__ = ["main", "build_parser"]


def _algos(text: str):
    return tuple(a.strip() for a in text.split(",") if a.strip())


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="metaofw",
                                 description="Online non-stochastic control benchmark.")
    sub = ap.add_subparsers(dest="command", required=True)

    for name, help_ in (("run", "run every (algorithm x seed) cell of a config"),
                        ("sweep-dims", "repeat a config over (d_x, d_u) = (2,1) ... (14,7)")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config", help="TOML experiment file")
        p.add_argument("--seed", type=int, help="first seed (overrides the file)")
        p.add_argument("--trials", type=int, help="number of consecutive seeds")
        p.add_argument("--out", help="CSV output path")
        p.add_argument("--algo", type=_algos, help="comma-separated algorithm list")
        p.add_argument("--workers", type=int, help="worker processes")
        p.add_argument("--no-timing", action="store_true",
                       help="blank the timing columns for byte-reproducible CSV")

    c = sub.add_parser("check", help="run the built-in invariant suite")
    c.add_argument("--seed", type=int, default=0)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "check":
            return 0 if run_checks(args.seed) else 1
        if args.workers is not None and args.workers < 1:
            raise ValueError("--workers must be >= 1")
        config = load_config(args.config).with_overrides(
            seed=args.seed, trials=args.trials, out=args.out, algorithms=args.algo)
        if args.command == "run":
            results = run_experiment(config, args.workers)
        else:
            results = sweep_dims(config, workers=args.workers)
        print(summarize(results))
        write_csv(results, config.out, include_timing=not args.no_timing)
        failed = [r for r in results if not r.ok]
        if failed:
            print(f"error: {len(failed)} of {len(results)} cells failed; first: {failed[0].error}",
                  file=sys.stderr)
            return 1
        return 0
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
