"""Command-line interface: run, plot-data, checkpoint, validate-config."""

from __future__ import annotations

import argparse
import json
import sys
import time

from .checkpoint import CheckpointError, checkpoint_info
from .config import ConfigError, ExperimentConfig
from .plotdata import PlotDataError, plot_data
from .runner import run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CRASH = 3


def _load_config(path: str, args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(path)
    if getattr(args, "num_executors", None) is not None:
        cfg.num_executors = args.num_executors
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "mode", None) is not None:
        cfg.mode = {"local": "local", "inprocess": "inprocess"}[args.mode]
    errors = cfg.validate()
    if errors:
        raise ConfigError(errors)
    return cfg


def cmd_run(args) -> int:
    try:
        cfg = _load_config(args.config, args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    run_dir = args.run_dir or f"runs/{cfg.name}_{time.strftime('%Y%m%d_%H%M%S')}"
    result = run_experiment(cfg, run_dir, resume=args.resume)
    if result.exit_code != EXIT_OK:
        print(f"node crashed: {result.failed_node}", file=sys.stderr)
        return EXIT_CRASH
    print(f"run complete: {run_dir}")
    return EXIT_OK


def cmd_plot_data(args) -> int:
    try:
        data = plot_data(args.run, window=args.window)
    except PlotDataError as exc:
        print(f"plot-data error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = json.dumps(data, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out)
    else:
        print(out)
    return EXIT_OK


def cmd_checkpoint(args) -> int:
    try:
        info = checkpoint_info(args.run)
    except CheckpointError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(info, indent=2))
    return EXIT_OK


def cmd_validate_config(args) -> int:
    try:
        ExperimentConfig.load(args.config)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    print("config ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="marlkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--num-executors", type=int, dest="num_executors")
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=["local", "inprocess"])
    p.add_argument("--run-dir")
    p.add_argument("--resume", action="store_true")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("plot-data", help="emit plot-ready JSON series from run metrics")
    p.add_argument("--run", action="append", required=True, help="run directory (repeatable)")
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_plot_data)

    p = sub.add_parser("checkpoint", help="inspect a run checkpoint")
    p.add_argument("--run", required=True)
    p.set_defaults(fn=cmd_checkpoint)

    p = sub.add_parser("validate-config", help="validate a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=cmd_validate_config)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
