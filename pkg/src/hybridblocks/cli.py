"""Command-line experiment runner.

    hybridblocks list
    hybridblocks run <experiment> [--config FILE] [--seed INT] [--out DIR]

Exit codes: 0 success, 2 config error, 1 numerical failure.
"""

import argparse
import dataclasses
import sys
from pathlib import Path

from . import __version__
from .backend import backend_name
from .errors import ConfigError, NumericalError
from .experiments import EXPERIMENTS, parse_config


def _flatten_metrics(result) -> list:
    lines = []
    metrics = getattr(result, "metrics", None)
    if isinstance(metrics, dict):
        for variant, vals in metrics.items():
            stats = " ".join(f"{k}={v:.6g}" for k, v in vals.items())
            lines.append(f"  {variant}: {stats}")
    report = getattr(result, "report", None)
    if isinstance(report, dict):
        for key in (
            "test_accuracy", "baseline_test_accuracy", "converged",
            "final_loss", "rel_distance_to_direct",
        ):
            if key in report:
                lines.append(f"  {key}: {report[key]}")
    return lines


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="hybridblocks", description=__doc__)
    parser.add_argument("--version", action="version", version=f"hybridblocks {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="enumerate the shipped experiments")

    run_p = sub.add_parser("run", help="run one experiment")
    run_p.add_argument("experiment", choices=sorted(EXPERIMENTS))
    run_p.add_argument("--config", type=Path, default=None, help="flat key=value config file")
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_p.add_argument("--out", type=Path, default=None, help="output directory (default runs/<name>)")

    args = parser.parse_args(argv)

    if args.command == "list":
        for name in sorted(EXPERIMENTS):
            print(name)
        return 0

    cfg_cls, runner = EXPERIMENTS[args.experiment]
    try:
        cfg = cfg_cls() if args.config is None else parse_config(args.config, cfg_cls)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except TypeError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2

    out_dir = args.out if args.out is not None else Path("runs") / args.experiment
    try:
        result = runner(cfg, out_dir)
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 1

    print(f"{args.experiment}: done (seed {cfg.seed}, backend {backend_name()})")
    print(f"  outputs in {out_dir}")
    for line in _flatten_metrics(result):
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
