"""Command line entry point: ``crnet <kind> --config <path> [--seed S] [--out DIR]``.

Exit status is 0 when every check passes, 1 when a check fails and 2 on a
usage or configuration error.
"""

import argparse
import sys

from .config import KINDS, ConfigError, default_config, load_config

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def build_parser():
    p = argparse.ArgumentParser(prog="crnet", description="Complex-reaction network experiments.")
    p.add_argument("kind", choices=KINDS, help="experiment to run")
    p.add_argument("--config", help="JSON config file (defaults are used when omitted)")
    p.add_argument("--seed", type=int, help="run a single seed instead of the configured list")
    p.add_argument("--out", help="output directory (overrides the config)")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    try:
        cfg = load_config(args.config) if args.config else default_config(args.kind)
        if cfg.kind != args.kind:
            raise ConfigError(f"config is for kind {cfg.kind!r}, not {args.kind!r}")
        if args.seed is not None:
            cfg.seeds = [args.seed]
        if args.out is not None:
            cfg.out = args.out
        cfg.validate()
        from .experiments import run
        report = run(cfg)
    except ConfigError as exc:
        print(f"crnet: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for line in report.checks.lines():
        print(line)
    for path in report.files:
        print(f"wrote {path}")
    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
