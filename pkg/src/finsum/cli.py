"""Command line entry point: ``finsum run|sweep|check``.

Environment variables FINSUM_CONFIG, FINSUM_SEED, FINSUM_OUT and FINSUM_JOBS
supply defaults; explicit flags take precedence.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

from . import __version__
from .harness import EXPERIMENTS, SchemaError, run_experiment, sweep, validate_config


def _load_config(path: Optional[str], experiment: Optional[str]) -> dict:
    if path:
        with open(path) as fh:
            try:
                cfg = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    elif experiment:
        cfg = {}
    else:
        raise SchemaError("no configuration: pass --config, --experiment or set FINSUM_CONFIG")
    if experiment:
        cfg["experiment"] = experiment
    return cfg


def _parse_seed(text: str) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="finsum", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"finsum {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "run one experiment and write its CSV"),
                        ("sweep", "run every cell of a parameter grid"),
                        ("check", "validate a configuration without running it")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", default=os.environ.get("FINSUM_CONFIG"),
                       help="JSON configuration file")
        p.add_argument("--experiment", choices=sorted(EXPERIMENTS),
                       help="experiment kind (overrides the config's)")
        p.add_argument("--seed", type=_parse_seed, default=None, help="64-bit seed")
        p.add_argument("--out", default=None, help="output CSV path (default stdout)")
        p.add_argument("--jobs", type=int, default=None, help="worker processes for sweeps")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    env = os.environ
    seed = args.seed
    if seed is None and env.get("FINSUM_SEED"):
        seed = _parse_seed(env["FINSUM_SEED"])
    out = args.out or env.get("FINSUM_OUT")
    jobs = args.jobs if args.jobs is not None else int(env.get("FINSUM_JOBS", "1"))
    try:
        cfg = _load_config(args.config, args.experiment)
        if out is None and "output" in cfg:
            out = cfg["output"]
        if args.command == "check":
            norm = validate_config(cfg, allow_grid=True)
            print(f"ok: {norm['experiment']}")
            return 0
        if args.command == "run":
            result = run_experiment(cfg, seed)
        else:
            result = sweep(cfg, seed, jobs=max(1, jobs))
    except SchemaError as exc:
        print(f"finsum: config error: {exc}", file=sys.stderr)
        return 2
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(result.csv)
    else:
        sys.stdout.write(result.csv)
    for msg in result.failures:
        print(f"finsum: invariant failure: {msg}", file=sys.stderr)
    return 1 if result.failures else 0


if __name__ == "__main__":
    sys.exit(main())
