"""Command-line entry point: ``fracrds <task> --config FILE [--out DIR] [--plots]``."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError
from .experiment import TASKS, load_config, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fracrds",
        description="Pathwise fBm-driven SPDE experiments: noise, solvers, pullback attractors.",
    )
    p.add_argument("task", choices=TASKS)
    p.add_argument("--config", required=True, help="JSON configuration file")
    p.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    p.add_argument("--plots", action="store_true", help="also write SVG plots")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, task=args.task)
    except ConfigError as exc:
        print(f"fracrds: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    manifest = run_experiment(cfg, args.out, plots=True if args.plots else None)
    if manifest.status != "ok":
        err = manifest.error or {}
        print(f"fracrds: {args.task} failed: {err.get('type')}: {err.get('message')}", file=sys.stderr)
        return manifest.exit_code
    print(json.dumps({"task": manifest.task, "status": manifest.status, "files": manifest.files}))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
