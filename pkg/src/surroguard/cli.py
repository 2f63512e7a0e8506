"""Command-line entry point.

    surroguard <stage> --config run.toml [--out DIR]

Stages: doe | train | profile | label | detector | hybrid | report, plus
`all` to run the full chain.  Exit codes: 0 success, 2 config problem,
3 stage failure.  Diagnostics are stage-tagged on stderr.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .pipeline import COMMANDS, STAGES, ConfigError, PipelineError, load_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="surroguard",
        description="surrogate-with-guardrails pipeline: train a cheap "
                    "surrogate, learn where it fails, and route risky "
                    "queries back to the expensive oracle",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="stage", required=True)
    for name in STAGES + ("all",):
        p = sub.add_parser(name, help=f"run the {name} stage"
                           if name != "all" else "run every stage in order")
        p.add_argument("--config", required=True,
                       help="TOML pipeline configuration")
        p.add_argument("--out", default=None,
                       help="run directory (overrides [run] out_dir)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, out_override=args.out)
    except ConfigError as exc:
        print(f"surroguard: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    stages = STAGES if args.stage == "all" else (args.stage,)
    for stage in stages:
        try:
            files = COMMANDS[stage](cfg)
        except ConfigError as exc:
            print(f"surroguard: {stage}: config: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except PipelineError as exc:
            print(f"surroguard: {stage}: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        except Exception as exc:  # surface module errors with the stage tag
            print(f"surroguard: {stage}: {type(exc).__name__}: {exc}",
                  file=sys.stderr)
            return EXIT_RUNTIME
        for name in sorted(files):
            print(f"[{stage}] wrote {files[name]}")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
