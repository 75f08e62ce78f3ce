"""``dickequench {scan,compare,husimi,thresholds}`` entry point."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from ..errors import ConfigError, NumericalFailure
from .config import PRESETS, RunConfig, load_file, preset
from .runs import COMMANDS

EXIT_OK, EXIT_CONFIG, EXIT_BREACH, EXIT_NUMERICAL = 0, 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dickequench", description="Dicke-model quench simulations.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or "").strip().splitlines()[0])
        p.add_argument("--config", type=Path, help="TOML or JSON file with run keys")
        p.add_argument("--preset", choices=sorted(PRESETS), help="figure recipe; --config keys override it")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory (default: .)")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for independent g columns")
        p.add_argument("--name", help="output base name (default: preset, config stem or command)")
    return ap


def resolve_config(args) -> RunConfig:
    cfg = preset(args.preset) if args.preset else RunConfig()
    if args.config is not None:
        cfg = load_file(args.config, base=cfg)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.jobs < 1:
            raise ConfigError("must be >= 1", "jobs")
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    name = args.name or args.preset or (args.config.stem if args.config else args.command)
    start = time.perf_counter()
    try:
        ds = COMMANDS[args.command](cfg, name=name, jobs=args.jobs)
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for path in ds.write(args.out, wall_clock=round(time.perf_counter() - start, 3)):
        print(path)
    if ds.breached:
        print("truncation breach: flagged cells written as nan with flag 'breach'", file=sys.stderr)
        return EXIT_BREACH
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
