"""Command-line entry point.

    hrvsepsis synth  --config run.yaml --out data/synth.csv
    hrvsepsis all    --config run.yaml [--seed N] [--out DIR]
    hrvsepsis <stage> --config run.yaml [--with-prereqs]
    hrvsepsis config                     # print the default config

On failure a single line ``error: <category>: <message>`` goes to stderr and
the exit code identifies the category (see ``EXIT_CODES``).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, dump_default, load_config
from .dataset import DatasetError
from .pipeline import STAGES, PrerequisiteError, Run, cmd_synth, run_all, run_stage

EXIT_CODES = {"internal": 1, "config": 2, "data": 3, "prerequisite": 4, "io": 5,
              "numeric": 6, "value": 7}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hrvsepsis", description="HRV sepsis classification pipeline")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in STAGES + ("all",):
        s = sub.add_parser(name, help=f"run the {name} stage" if name != "all" else "run every stage")
        s.add_argument("--config", type=Path, help="YAML run config")
        s.add_argument("--seed", type=int, help="override the config seed")
        s.add_argument("--out", type=Path, help="override the output directory")
        if name != "all":
            s.add_argument("--with-prereqs", action="store_true",
                           help="run missing upstream stages first")
    s = sub.add_parser("synth", help="write a synthetic dataset with the HRV column names")
    s.add_argument("--config", type=Path)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", type=Path, required=True, help="CSV path to write")
    sub.add_parser("config", help="print the default config")
    return p


def categorize(exc: BaseException) -> str:
    if isinstance(exc, ConfigError):
        return "config"
    if isinstance(exc, DatasetError):
        return "data"
    if isinstance(exc, PrerequisiteError):
        return "prerequisite"
    if isinstance(exc, OSError):
        return "io"
    if isinstance(exc, (FloatingPointError, ArithmeticError)):
        return "numeric"
    if isinstance(exc, ValueError):
        return "value"
    return "internal"


def _dispatch(args) -> int:
    if args.command == "config":
        sys.stdout.write(dump_default())
        return 0
    cfg = load_config(args.config)
    if args.command == "synth":
        cfg = cfg.with_overrides(seed=args.seed)
        path = cmd_synth(cfg, args.out)
        print(path)
        return 0
    cfg = cfg.with_overrides(seed=args.seed, output_dir=args.out)
    run = Run(cfg)
    if args.command == "all":
        run_all(run)
    else:
        run_stage(run, args.command, args.with_prereqs)
    print(run.write_manifest())
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except Exception as exc:      # noqa: BLE001 - every failure maps to one category line
        cat = categorize(exc)
        msg = " ".join(str(exc).split()) or type(exc).__name__
        print(f"error: {cat}: {msg}", file=sys.stderr)
        return EXIT_CODES[cat]


if __name__ == "__main__":
    sys.exit(main())
