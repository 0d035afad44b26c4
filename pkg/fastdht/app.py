#!/usr/bin/env python3

"""
Fast DHT - Command Line Application

Subcommands:
  transform  transform signal files (fast kernels or the naive oracle)
  verify     check built-in factorizations against the Hartley matrix
  counts     achieved vs. published operation counts
  bench      time fast kernels against the naive transform
  program    print a kernel's straight-line program

Exit status: 0 success, 1 verification or validation failure, 2 usage error.
"""

import argparse
import json
import logging
import os
import statistics
import sys
import time
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from utils.export import detect_format, export_report, read_signals, write_signals
from utils.hartley import inverse_dht, naive_dht
from utils.kernels import SUPPORTED_LENGTHS, kernel_registry
from utils.slp import format_program, run_slp

__version__ = "1.0.0"

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


# =============================================================================
# CONFIGURATION
# =============================================================================


def env_float(name: str, default: str) -> float:
    return float(os.environ.get(name, default))


def env_int(name: str, default: str) -> int:
    return int(os.environ.get(name, default))


def configure_logging(verbose: bool = False) -> None:
    """Log to stderr, plus FASTDHT_LOG_FILE when set; stdout carries command output"""
    level_name = "DEBUG" if verbose else os.environ.get("FASTDHT_LOG_LEVEL", "INFO").upper()
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]

    log_file = os.environ.get("FASTDHT_LOG_FILE")
    if log_file:
        log_dir = os.path.dirname(os.path.abspath(log_file))
        os.makedirs(log_dir, exist_ok=True)
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(
        level=getattr(logging, level_name, logging.INFO),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )


# =============================================================================
# COMMANDS
# =============================================================================


def fail(message: str) -> int:
    logger.error(message)
    print(f"ERROR: {message}", file=sys.stderr)
    return EXIT_FAILURE


def cmd_transform(args: argparse.Namespace) -> int:
    vectors = read_signals(args.input, args.format)
    n = vectors[0].size
    logger.info(f"=== TRANSFORM {args.direction.upper()} ({args.mode}) ===")
    logger.info(f"{len(vectors)} signals of length {n} from {args.input}")

    if args.mode == "fast":
        results = kernel_registry.batch_transform(vectors, args.direction)
    elif args.direction == "forward":
        results = [naive_dht(v) for v in vectors]
    else:
        results = [inverse_dht(v) for v in vectors]

    write_signals(results, args.output, detect_format(args.input, args.format))

    if args.counts and args.mode == "fast":
        opcount = kernel_registry.get(n).opcount
        print(
            f"N={n}: {opcount.multiplications} mul, {opcount.rational_multiplications} rational mul, "
            f"{opcount.additions} add per transform; "
            f"{len(results)} transforms: {opcount.total_multiplications * len(results)} mul, "
            f"{opcount.additions * len(results)} add"
        )
    return EXIT_OK


def requested_lengths(args: argparse.Namespace) -> Sequence[int]:
    if args.all or args.n is None:
        return SUPPORTED_LENGTHS
    kernel_registry.get(args.n)
    return (args.n,)


def print_table(rows: List[Dict], columns: Sequence[str]) -> None:
    frame = pd.DataFrame(rows)
    print(frame[list(columns)].to_string(index=False))


def cmd_verify(args: argparse.Namespace) -> int:
    report = kernel_registry.audit(tol=args.tol, trials=args.trials, seed=args.seed, lengths=requested_lengths(args))
    rows = [record.to_dict() for record in report.records]

    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print_table(
            rows,
            [
                "N",
                "multiplications",
                "rational_multiplications",
                "total_multiplications",
                "additions",
                "dense_error",
                "oracle_error",
                "pass",
            ],
        )
        print(f"tolerance {args.tol:g}: {'PASS' if report.passed else 'FAIL'}")

    if args.export:
        export_report(rows, args.export, title="Fast DHT Verification Report")

    if not report.passed:
        failed = [str(record.blocklength) for record in report.records if not record.passed]
        return fail(f"Verification failed for N = {', '.join(failed)}")
    return EXIT_OK


def cmd_counts(args: argparse.Namespace) -> int:
    report = kernel_registry.audit(tol=args.tol, trials=args.trials, seed=args.seed)
    rows = []
    for record in report.records:
        row = record.to_dict()
        row["excess"] = "MUL" if record.multiplications > record.claimed_mul else ""
        if record.additions > record.claimed_add:
            row["excess"] = (row["excess"] + " ADD").strip()
        rows.append(row)

    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print_table(
            rows,
            [
                "N",
                "multiplications",
                "claimed_mul",
                "rational_multiplications",
                "total_multiplications",
                "additions",
                "claimed_add",
                "excess",
            ],
        )

    if args.export:
        export_report(rows, args.export, title="Fast DHT Operation Counts")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(args.seed)
    rows = []
    logger.info(f"=== BENCHMARK (iters={args.iters}, seed={args.seed}) ===")

    for n in requested_lengths(args):
        kernel = kernel_registry.get(n)
        signals = rng.uniform(-1.0, 1.0, (args.iters, n))

        fast_times, naive_times = [], []
        checksum = 0.0
        for v in signals:
            start = time.perf_counter()
            result = run_slp(kernel.program, v)
            fast_times.append(time.perf_counter() - start)

            start = time.perf_counter()
            naive_dht(v)
            naive_times.append(time.perf_counter() - start)
            checksum += float(np.sum(result))

        rows.append(
            {
                "N": n,
                "iters": args.iters,
                "fast_median_us": statistics.median(fast_times) * 1e6,
                "naive_median_us": statistics.median(naive_times) * 1e6,
                "fast_mul": kernel.opcount.total_multiplications,
                "fast_add": kernel.opcount.additions,
                "naive_mul": n * n,
                "naive_add": n * (n - 1),
                "checksum": checksum,
            }
        )

    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        print_table(rows, list(rows[0].keys()))
    return EXIT_OK


def cmd_program(args: argparse.Namespace) -> int:
    kernel = kernel_registry.get(args.n)
    print(format_program(kernel.program))
    tally = kernel.program.tally()
    print(
        f"# {tally['ADD'] + tally['SUB']} ADD/SUB, {tally['MUL_CONST']} MUL_CONST, "
        f"{tally['NEG']} NEG, {tally['LOAD']} LOAD"
    )
    return EXIT_OK


# =============================================================================
# ENTRY POINT
# =============================================================================


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    tolerance = env_float("FASTDHT_TOLERANCE", "1e-12")
    seed = env_int("FASTDHT_SEED", "2024")
    iters = env_int("FASTDHT_BENCH_ITERS", "200")
    trials = env_int("FASTDHT_VERIFY_TRIALS", "100")

    parser = argparse.ArgumentParser(description="Minimal-multiplication fast discrete Hartley transforms")
    parser.add_argument("--verbose", action="store_true", help="Enable debug logging")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    transform = subparsers.add_parser("transform", help="Transform signals in a CSV or JSON file")
    transform.add_argument("--input", required=True, help="Input signal file")
    transform.add_argument("--output", required=True, help="Output file")
    transform.add_argument("--direction", choices=["forward", "inverse"], default="forward")
    transform.add_argument("--mode", choices=["fast", "naive"], default="fast")
    transform.add_argument("--format", choices=["csv", "json"], help="Signal file format (default: from extension)")
    transform.add_argument("--counts", action="store_true", help="Print operation counts (fast mode)")
    transform.set_defaults(handler=cmd_transform)

    for name, handler, help_text in (
        ("verify", cmd_verify, "Verify built-in factorizations"),
        ("counts", cmd_counts, "Compare achieved and published operation counts"),
    ):
        sub = subparsers.add_parser(name, help=help_text)
        if name == "verify":
            sub.add_argument("n", nargs="?", type=int, help="Blocklength")
            sub.add_argument("--all", action="store_true", help="All supported blocklengths")
        sub.add_argument("--tol", type=float, default=tolerance, help=f"Tolerance (default {tolerance:g})")
        sub.add_argument("--trials", type=positive_int, default=trials, help="Random vectors per kernel")
        sub.add_argument("--seed", type=int, default=seed)
        sub.add_argument("--json", action="store_true", help="Print the report as JSON")
        sub.add_argument("--export", metavar="PATH", help="Write the report as .csv, .xlsx or .pdf")
        sub.set_defaults(handler=handler)

    bench = subparsers.add_parser("bench", help="Time fast kernels against the naive transform")
    bench.add_argument("n", nargs="?", type=int, help="Blocklength")
    bench.add_argument("--all", action="store_true", help="All supported blocklengths")
    bench.add_argument("--iters", type=positive_int, default=iters)
    bench.add_argument("--seed", type=int, default=seed)
    bench.add_argument("--json", action="store_true", help="Print results as JSON")
    bench.set_defaults(handler=cmd_bench)

    program = subparsers.add_parser("program", help="Print a kernel's straight-line program")
    program.add_argument("n", type=int, help="Blocklength")
    program.set_defaults(handler=cmd_program)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    configure_logging(args.verbose)

    if args.command == "verify" and args.n is None and not args.all:
        parser.print_usage(sys.stderr)
        print("ERROR: verify needs a blocklength or --all", file=sys.stderr)
        return EXIT_USAGE

    try:
        return args.handler(args)
    except ValueError as e:
        return fail(str(e))
    except OSError as e:
        return fail(f"{type(e).__name__}: {e}")


if __name__ == "__main__":
    sys.exit(main())
