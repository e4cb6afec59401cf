#!/usr/bin/env python3
"""
Long-range percolation experiments.

    python lrp.py <kind> --config configs/<kind>.conf [--seed N] [--workers N] [--out DIR] [--dry-run]
"""

import argparse
import logging
import sys
from pathlib import Path

from lrpkit.errors import ConfigError, LRPError
from lrpkit.harness.config import KINDS, load_config
from lrpkit.harness.pipelines import run
from lrpkit.log import configure_logging

EXIT_ERROR = 2
EXIT_INTERRUPTED = 130


def build_parser():
    parser = argparse.ArgumentParser(description="Long-range percolation toolkit")
    parser.add_argument("kind", choices=KINDS, help="Experiment kind (must match the config)")
    parser.add_argument("-c", "--config", required=True, help="Experiment config file")
    parser.add_argument("--seed", type=int, help="Master seed (overrides run.seed)")
    parser.add_argument("--workers", type=int, help="Worker processes (default: LRP_WORKERS or CPU count)")
    parser.add_argument("-o", "--out", help="Output folder (overrides run.out)")
    parser.add_argument("--dry-run", action="store_true", help="Validate the config and exit")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="No progress bars")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    configure_logging(logging.DEBUG if args.verbose else logging.INFO)

    try:
        config = load_config(args.config)
        if config.kind != args.kind:
            raise ConfigError(f"config describes a {config.kind!r} experiment, not {args.kind!r}", field="kind")
        config = config.with_overrides(seed=args.seed, workers=args.workers, out=args.out)
    except LRPError as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return EXIT_ERROR

    print("🎲 Long-range percolation toolkit")
    print("=" * 50)
    print(f"🧪 Experiment: {config.kind}")
    print(f"📐 Kernel: d={config.d}, alpha={config.alpha:g}")
    print(f"🌱 Seed: {config.seed}")
    print(f"📂 Output: {config.out}")
    print(f"🔑 Config hash: {config.config_hash()}")
    print("=" * 50)

    if args.dry_run:
        print("✓ Config is valid")
        return 0

    try:
        summary = run(config, workers=args.workers, progress=False if args.quiet else None)
    except KeyboardInterrupt:
        print("\n⚠️  Interrupted; completed chunks are kept in the checkpoint. Re-run to resume.")
        return EXIT_INTERRUPTED
    except LRPError as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return EXIT_ERROR

    print("\n" + "=" * 50)
    print("📊 Run Summary:")
    print(f"✓ Records written: {len(summary.records)}")
    for report in summary.reports:
        print(f"📈 {report.target}: {Path(report.svg_path).name} (exponent {report.fit.exponent:.4f})")
    print(f"📁 Results: {summary.path.absolute()}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
