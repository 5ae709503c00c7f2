"""Command-line entry point: ``python -m longpoisson <verb> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from typing import List, Optional

from ..errors import LongPoissonError
from .experiments import Resolution, parse_config, preset, run_experiment, write_rows

VERBS = ("table1", "table2", "table3", "table4", "table5", "table6", "fig3")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="python -m longpoisson",
        description="Reproduce the low-rank Poisson benchmarks and write the results as CSV.")
    ap.add_argument("verb", choices=VERBS + ("custom",))
    ap.add_argument("config", nargs="?", help="key=value config file (for 'custom')")
    ap.add_argument("--out", help="CSV output path (default: stdout)")
    ap.add_argument("--resolution", metavar="H:HPRIME",
                    help="run at one resolution: 'default', 'half' or 'h:hprime'")
    ap.add_argument("--quiet", action="store_true", help="suppress progress messages")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.verb == "custom" and not args.config:
        ap.error("custom needs a config file")
    if args.verb != "custom" and args.config:
        ap.error(f"{args.verb} takes no config file")
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        if args.verb == "custom":
            with open(args.config) as fh:
                cfg = parse_config(fh.read())
        else:
            cfg = preset(args.verb)
        if args.resolution:
            cfg = replace(cfg, resolutions=(Resolution.parse(args.resolution),))
        out = args.out or cfg.out
        rows = run_experiment(cfg)
    except (LongPoissonError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if out:
        with open(out, "w", newline="") as fh:
            write_rows(rows, fh)
    else:
        write_rows(rows, sys.stdout)
    return 1 if any(r.status != "ok" for r in rows) else 0
