"""Command-line interface: run experiments, presets, and optimizations.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from .errors import ConfigError, ConvergenceError, MMFDRError
from .experiment import parse_config, preset, run_experiment, write_csv


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmfdr",
        description="Multi-pair full-duplex relaying simulator and optimizer")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--trials", type=int)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--out", help="CSV output path (default: stdout)")

    p_preset = sub.add_parser("preset", help="run a named reference scenario")
    p_preset.add_argument("name")
    p_preset.add_argument("--trials", type=int)
    p_preset.add_argument("--seed", type=int)
    p_preset.add_argument("--out", help="CSV output path (default: <name>.csv)")

    p_opt = sub.add_parser("optimize", help="joint DOF and power optimization")
    p_opt.add_argument("--config", required=True)
    p_opt.add_argument("--objective", choices=("se", "ee"), required=True)
    p_opt.add_argument("--target-rate", type=float,
                       help="total spectral-efficiency target for the ee objective")
    p_opt.add_argument("--out", help="CSV output path (default: stdout)")
    return parser


def _apply_overrides(spec, args):
    changes = {}
    if getattr(args, "trials", None) is not None:
        changes["trials"] = args.trials
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        changes["out"] = args.out
    return replace(spec, **changes) if changes else spec


def _emit(rows, out_path):
    if out_path:
        write_csv(rows, out_path)
        print(f"wrote {len(rows)} rows to {out_path}")
    else:
        write_csv(rows, sys.stdout)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            spec = _apply_overrides(parse_config(args.config), args)
            _emit(run_experiment(spec), spec.out)
        elif args.command == "preset":
            spec = preset(args.name)
            spec = _apply_overrides(spec, args)
            out = spec.out or f"{args.name}.csv"
            _emit(run_experiment(spec), out)
        elif args.command == "optimize":
            spec = parse_config(args.config)
            mode = "optimize-se" if args.objective == "se" else "optimize-ee"
            changes = {"mode": mode}
            if args.target_rate is not None:
                changes["target_se"] = args.target_rate
            if args.out is not None:
                changes["out"] = args.out
            spec = replace(spec, **changes)
            _emit(run_experiment(spec), spec.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, MMFDRError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
