"""Command line entry point: ``asymop <stage> [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__
from ._accel import BACKEND
from .errors import AsymopError
from .pipeline import ALL_ORDER, PRESETS, load_config, run_stage

log = logging.getLogger("asymop")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="JSON config file")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (dotted keys, JSON values), repeatable")
    common.add_argument("-o", "--output", help="output directory (same as --set output=DIR)")
    common.add_argument("-q", "--quiet", action="store_true", help="only log warnings and errors")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(prog="asymop", description="Asymmetric relationship strength pipeline.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND})")
    sub = parser.add_subparsers(dest="stage", required=True)
    helps = {
        "ingest": "parse the corpus into messages.jsonl and pairs.csv",
        "features": "compute raw language features per directed pair",
        "graph": "build the mutual graph, normalize features, enumerate triangles",
        "solve": "infer strengths for one preset (default: all presets)",
        "stats": "bidirectional and habit deviation tables",
        "personality": "correlation scores by personality group",
        "eval": "precision against superior/subordinate ground truth",
        "all": "run " + ", ".join(ALL_ORDER) + " in order",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, parents=[common], help=text, description=text)
        if name in ("solve", "all"):
            sp.add_argument("--preset", choices=list(PRESETS), help="weight/objective preset")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    overrides = list(args.overrides)
    if args.output:
        overrides.append(f"output={json.dumps(os.path.abspath(args.output))}")
    try:
        cfg, base = load_config(args.config, overrides)
        run = run_stage(args.stage, cfg, base, getattr(args, "preset", None))
    except (AsymopError, ValueError, OSError) as exc:
        code = exc.code if isinstance(exc, AsymopError) else type(exc).__name__
        print(json.dumps({"error": code, "stage": args.stage, "message": str(exc)}, sort_keys=True),
              file=sys.stderr)
        return 2
    log.info("wrote artifacts to %s", run.out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
