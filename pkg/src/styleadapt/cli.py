"""Command-line entry point.

Exit status: 0 ok, 1 runtime failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__
from .errors import StyleAdaptError
from .metrics import gap_report
from .pipeline import (
    MODES,
    PAIRINGS,
    REPORT_NAME,
    build_style_bank,
    check_plan_params,
    execute_plan,
    make_plan,
    scan_corpus,
)
from .selfcheck import run_selfcheck
from .style import DEFAULT_EPSILON

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2
WORKERS_ENV = "STYLEADAPT_WORKERS"
BANK_NAME = "stylebank.txt"

log = logging.getLogger("styleadapt")


class UsageError(Exception):
    pass


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"{WORKERS_ENV}={env!r} is not an integer") from None
        if n < 1:
            raise UsageError(f"{WORKERS_ENV} must be >= 1")
        return n
    return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--source-dir", type=Path)
    common.add_argument("--target-dir", type=Path)
    common.add_argument("--out-dir", type=Path)
    common.add_argument("--mode", choices=MODES)
    common.add_argument("--pairing", choices=PAIRINGS, default="random-seeded")
    common.add_argument("--beta", type=float, default=0.01,
                        help="low-frequency window fraction (default 0.01)")
    common.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON,
                        help="variance regularizer for std / SAIN (default 1e-5)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=None,
                        help=f"worker processes (default ${WORKERS_ENV} or CPU count)")
    common.add_argument("--clamp", action="store_true",
                        help="clip out-of-range samples to [0, 1] when writing 8-bit images")

    parser = argparse.ArgumentParser(prog="styleadapt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    sub.add_parser("translate", parents=[common],
                   help="translate a source corpus toward a target style")
    sub.add_parser("stats", parents=[common], help="compute and write a style bank")
    sub.add_parser("gap", parents=[common], help="report the style gap between two corpora")
    sub.add_parser("verify", parents=[common], help="run the built-in self-checks")
    return parser


_REQUIRED = {
    "translate": ("source_dir", "target_dir", "out_dir", "mode"),
    "stats": ("source_dir",),
    "gap": ("source_dir", "target_dir"),
    "verify": (),
}


def validate(args) -> None:
    missing = [f"--{name.replace('_', '-')}" for name in _REQUIRED[args.subcommand]
               if getattr(args, name) is None]
    if missing:
        raise UsageError(f"{args.subcommand} requires {', '.join(missing)}")
    if args.workers is None:
        args.workers = default_workers()
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    if not args.epsilon > 0:
        raise UsageError("--epsilon must be positive")
    if not 0 <= args.seed < 2**64:
        raise UsageError("--seed must fit in an unsigned 64-bit integer")
    if args.subcommand == "gap" and not 0.0 < args.beta <= 1.0:
        raise UsageError("gap needs --beta in (0, 1]")
    if not 0.0 <= args.beta <= 1.0:
        raise UsageError("--beta must lie in [0, 1]")
    if args.subcommand == "translate":
        try:
            check_plan_params(args.mode, args.pairing, args.seed, args.beta, args.epsilon)
        except ValueError as exc:
            raise UsageError(str(exc)) from None


def cmd_translate(args) -> int:
    source = scan_corpus(args.source_dir)
    target = scan_corpus(args.target_dir)
    plan = make_plan(source, target, args.mode, args.pairing, args.seed,
                     args.beta, args.epsilon, args.clamp)
    t0 = time.perf_counter()
    report = execute_plan(plan, args.out_dir, workers=args.workers)
    elapsed = time.perf_counter() - t0
    (args.out_dir / REPORT_NAME).write_text(report.to_text(), encoding="utf-8")
    print(f"translated {report.ok}/{report.total} files ({report.failed} failed) "
          f"in {elapsed:.2f}s with {args.workers} worker(s); report: {args.out_dir / REPORT_NAME}")
    return EXIT_OK if report.exit_status == 0 else EXIT_FAILURE


def cmd_stats(args) -> int:
    bank = build_style_bank(scan_corpus(args.source_dir), args.epsilon)
    if args.out_dir is None:
        sys.stdout.write(bank.to_text())
    else:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        bank.write(args.out_dir / BANK_NAME)
        print(f"wrote {len(bank.per_image)} image statistics to {args.out_dir / BANK_NAME}")
    return EXIT_OK


def cmd_gap(args) -> int:
    report = gap_report(scan_corpus(args.source_dir), scan_corpus(args.target_dir),
                        beta=args.beta, epsilon=args.epsilon, seed=args.seed,
                        pairing=args.pairing)
    sys.stdout.write(report.to_text())
    return EXIT_OK


def cmd_verify(args) -> int:
    return EXIT_OK if run_selfcheck(print, seed=args.seed) == 0 else EXIT_FAILURE


COMMANDS = {"translate": cmd_translate, "stats": cmd_stats, "gap": cmd_gap, "verify": cmd_verify}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        validate(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"styleadapt {args.subcommand}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.subcommand](args)
    except (StyleAdaptError, OSError, ValueError) as exc:
        print(f"styleadapt {args.subcommand}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
