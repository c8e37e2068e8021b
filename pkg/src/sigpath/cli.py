"""Command line entry points.

`sigpath sig` prints the truncated signature of a CSV path; `sigpath run`
executes an experiment config.  Exit codes: 0 success, 2 config/input error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .experiments import ConfigError, ExperimentConfig, NumericalError, run_config
from .paths import PathFormatError, read_path_csv, time_extend
from .signature import signature


def _cmd_sig(args) -> int:
    path = read_path_csv(args.input)
    level = args.level
    if level is None:
        level = 4 if path.dim == 1 else 3
    sig = signature(time_extend(path), level)
    payload = {
        "dim": sig.dim,
        "level": sig.level,
        "coeffs": [blk.tolist() for blk in sig.coeffs],
    }
    json.dump(payload, sys.stdout)
    sys.stdout.write("\n")
    return 0


def _cmd_run(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if args.seed is not None:
        raw["seed"] = args.seed
    cfg = ExperimentConfig.from_dict(raw)
    csv_path, _ = run_config(cfg, out=args.out, append=args.append)
    print(csv_path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sigpath",
        description="Signatures of piecewise linear paths and approximation "
        "experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sig = sub.add_parser("sig", help="print the signature of a CSV path")
    p_sig.add_argument("--input", required=True, help="breakpoint CSV (t,x1,...,xd)")
    p_sig.add_argument("--level", type=int, default=None, help="truncation order")
    p_sig.set_defaults(func=_cmd_sig)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("--config", required=True, help="JSON experiment config")
    p_run.add_argument("--out", default=None, help="results CSV path")
    p_run.add_argument("--seed", type=int, default=None, help="override config seed")
    p_run.add_argument(
        "--append", action="store_true",
        help="append rows to an existing results file (schemas must match)",
    )
    p_run.set_defaults(func=_cmd_run)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, PathFormatError, FileNotFoundError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (NumericalError, FloatingPointError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
