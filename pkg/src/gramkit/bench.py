"""Benchmark harness: generate or load inputs, time serial and parallel
runs, verify against the classical reference, and derive speed-up,
efficiency and the Karp-Flatt serial fraction."""

from __future__ import annotations

import csv
import json
import os
import statistics
import time
from dataclasses import dataclass

import numpy as np

from .gram import GramConfig, MultCounter, classical_gram, gram, gram_tolerance
from .matrix import DenseMatrix
from .runtime import CommStats, run_parallel
from .schedule import build_tree

DEFAULT_SWEEP = (1, 6, 12, 15, 18, 38)


@dataclass
class BenchReport:
    n: int
    m: int
    workers: int
    reps: int
    serial_time: float
    parallel_time: float
    speedup: float
    efficiency: float
    karp_flatt: float | None
    comm: CommStats
    mult_count: int | None
    check_passed: bool | None
    # verification diagnostics, not part of the CSV schema
    check_max_error: float | None = None
    check_error_loc: tuple | None = None


def karp_flatt(speedup: float, workers: int) -> float:
    """Experimentally determined serial fraction e = (1/S - 1/P) / (1 - 1/P)."""
    if workers < 2:
        raise ValueError("Karp-Flatt metric needs at least 2 workers")
    if speedup <= 0:
        raise ValueError("speed-up must be positive")
    return (1.0 / speedup - 1.0 / workers) / (1.0 - 1.0 / workers)


def gen_matrix(rows, cols, seed=0, distribution="uniform") -> DenseMatrix:
    """Deterministic test matrix; entries uniform in [-1, 1] by default."""
    if rows < 1 or cols < 1:
        raise ValueError("matrix dimensions must be >= 1")
    rng = np.random.default_rng(seed)
    if distribution == "uniform":
        arr = rng.uniform(-1.0, 1.0, size=(rows, cols))
    elif distribution == "normal":
        arr = rng.standard_normal((rows, cols))
    elif distribution == "ones":
        arr = np.ones((rows, cols))
    else:
        raise ValueError(f"unknown distribution {distribution!r}")
    return DenseMatrix(arr)


def verify_gram(result, a):
    """Check a packed result against the classical reference.

    Returns (passed, frobenius_error, max_abs_error, (i, j) of the worst
    entry); passed uses the Frobenius bound 1e-9 * ||A||_F^2.
    """
    reference = classical_gram(a)
    diff = result.unpack().array - reference.unpack().array
    absdiff = np.abs(diff)
    loc = np.unravel_index(int(np.argmax(absdiff)), absdiff.shape)
    fro = float(np.sqrt(np.sum(diff * diff)))
    return (fro <= gram_tolerance(a), fro, float(absdiff[loc]),
            (int(loc[0]), int(loc[1])))


def sweep_workers(cap=None):
    """Default worker sweep capped at twice the hardware parallelism."""
    if cap is None:
        cap = 2 * (os.cpu_count() or 1)
    return [p for p in DEFAULT_SWEEP if p == 1 or p <= cap]


def run_bench(rows, cols, workers=1, reps=3, seed=0, base_threshold=32,
              check=False, count_mults=False, trace_path=None,
              matrix=None) -> BenchReport:
    """One benchmark configuration: median-of-reps serial and parallel
    timings plus derived metrics.  With workers == 1 the serial run is the
    parallel run, so the speed-up is 1 by definition."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    a = gen_matrix(rows, cols, seed) if matrix is None else matrix
    m, n = a.rows, a.cols
    cfg = GramConfig(base_threshold=base_threshold, count_mults=count_mults)

    serial_times = []
    result = None
    for _ in range(reps):
        t0 = time.perf_counter()
        result = gram(a, cfg)
        serial_times.append(time.perf_counter() - t0)
    serial_time = statistics.median(serial_times)

    comm = CommStats()
    parallel_time = serial_time
    if workers > 1:
        tree = build_tree(workers, m, n)
        parallel_times = []
        for _ in range(reps):
            t0 = time.perf_counter()
            result, comm, _walls = run_parallel(a, tree, cfg, trace_path=trace_path)
            parallel_times.append(time.perf_counter() - t0)
        parallel_time = statistics.median(parallel_times)
    elif trace_path:
        run_parallel(a, build_tree(1, m, n), cfg, trace_path=trace_path)

    speedup = serial_time / parallel_time
    efficiency = speedup / workers
    kf = karp_flatt(speedup, workers) if workers >= 2 else None

    mult_count = None
    if count_mults:
        counter = MultCounter()
        gram(a, cfg, counter)
        mult_count = counter.scalar_mults

    check_passed = max_err = loc = None
    if check:
        check_passed, _fro, max_err, loc = verify_gram(result, a)

    return BenchReport(n=n, m=m, workers=workers, reps=reps,
                       serial_time=serial_time, parallel_time=parallel_time,
                       speedup=speedup, efficiency=efficiency, karp_flatt=kf,
                       comm=comm, mult_count=mult_count,
                       check_passed=check_passed,
                       check_max_error=max_err, check_error_loc=loc)


CSV_FIELDS = [
    "n", "m", "workers", "reps", "serial_time", "parallel_time",
    "speedup", "efficiency", "karp_flatt",
    "messages_critical_path", "words_critical_path", "messages_total",
    "words_total", "max_message_words", "comm_wall_time",
    "mult_count", "check_passed",
]


def _report_values(report):
    c = report.comm
    return [report.n, report.m, report.workers, report.reps,
            report.serial_time, report.parallel_time, report.speedup,
            report.efficiency, report.karp_flatt,
            c.messages_critical_path, c.words_critical_path, c.messages_total,
            c.words_total, c.max_message_words, c.comm_wall_time,
            report.mult_count, report.check_passed]


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)  # full precision so the metric identities replay exactly
    return str(v)


def write_csv(reports, stream):
    writer = csv.writer(stream)
    writer.writerow(CSV_FIELDS)
    for report in reports:
        writer.writerow([_csv_cell(v) for v in _report_values(report)])


def write_json(reports, stream):
    rows = [dict(zip(CSV_FIELDS, _report_values(r))) for r in reports]
    json.dump(rows, stream, indent=2)
    stream.write("\n")
