"""Benchmark command line.

Exit codes: 0 success, 1 verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .bench import gen_matrix, run_bench, sweep_workers, write_csv, write_json
from .matrix import load_matrix
from .schedule import build_tree, tree_to_json


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gramkit",
        description="Benchmark the Strassen-based Gram product (A^T A): "
                    "serial and multiprocess runs with speed-up, efficiency "
                    "and Karp-Flatt reporting.")
    p.add_argument("--rows", type=int, help="input row count (ignored with --input)")
    p.add_argument("--cols", type=int, help="input column count (ignored with --input)")
    p.add_argument("--input", metavar="PATH",
                   help="load the input matrix (text or binary format)")
    p.add_argument("--workers", type=int,
                   default=int(os.environ.get("GRAMKIT_WORKERS", "1")),
                   help="worker count P (default: $GRAMKIT_WORKERS or 1)")
    p.add_argument("--sweep", action="store_true",
                   help="run the default worker sweep instead of --workers")
    p.add_argument("--reps", type=int, default=3, help="timing repetitions (median)")
    p.add_argument("--seed", type=int, default=0, help="generator seed")
    p.add_argument("--distribution", choices=("uniform", "normal", "ones"),
                   default="uniform", help="generated entry distribution")
    p.add_argument("--base-threshold", type=int, default=32,
                   help="largest min-dimension still multiplied classically")
    p.add_argument("--check", action="store_true",
                   help="verify results against the classical reference")
    p.add_argument("--count-mults", action="store_true",
                   help="report the exact scalar multiplication count")
    p.add_argument("--trace", metavar="PATH",
                   help="write one CSV line per message of the parallel run")
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="report format on stdout")
    p.add_argument("--dump-tree", action="store_true",
                   help="print the task tree as JSON and exit")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.workers < 1:
        parser.error("--workers must be >= 1")
    if args.reps < 1:
        parser.error("--reps must be >= 1")
    if args.base_threshold < 1:
        parser.error("--base-threshold must be >= 1")

    if args.input:
        try:
            matrix = load_matrix(args.input)
        except (OSError, ValueError) as exc:
            parser.error(f"cannot load {args.input}: {exc}")
    else:
        if args.rows is None or args.cols is None:
            parser.error("--rows and --cols are required unless --input is given")
        if args.rows < 1 or args.cols < 1:
            parser.error("matrix dimensions must be >= 1")
        matrix = gen_matrix(args.rows, args.cols, args.seed, args.distribution)

    if args.dump_tree:
        tree = build_tree(args.workers, matrix.rows, matrix.cols)
        json.dump(tree_to_json(tree), sys.stdout, indent=2)
        sys.stdout.write("\n")
        return 0

    worker_list = sweep_workers() if args.sweep else [args.workers]
    reports = []
    failed = False
    for workers in worker_list:
        report = run_bench(matrix.rows, matrix.cols, workers=workers,
                           reps=args.reps, seed=args.seed,
                           base_threshold=args.base_threshold,
                           check=args.check, count_mults=args.count_mults,
                           trace_path=args.trace, matrix=matrix)
        reports.append(report)
        print(f"m={report.m} n={report.n} P={report.workers}: "
              f"serial {report.serial_time:.4f}s, parallel {report.parallel_time:.4f}s, "
              f"S={report.speedup:.2f}, E={report.efficiency:.3f}",
              file=sys.stderr)
        if args.check and not report.check_passed:
            failed = True
            print(f"verification FAILED for P={workers}: max abs error "
                  f"{report.check_max_error:.3e} at entry {report.check_error_loc}",
                  file=sys.stderr)

    if args.format == "csv":
        write_csv(reports, sys.stdout)
    else:
        write_json(reports, sys.stdout)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
