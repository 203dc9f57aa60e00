"""Compare the compiled kernel backend against the pure-NumPy fallback.

Times the serial Gram product per backend over a few sizes and prints a
small table.  Run from the repository root:

    python benchmarks/backend_compare.py [--sizes 128,256,512] [--reps 3]
"""

import argparse
import statistics
import time

from gramkit import GramConfig, gen_matrix, gram
from gramkit import kernels


def time_once(a, cfg):
    t0 = time.perf_counter()
    gram(a, cfg)
    return time.perf_counter() - t0


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="128,256,512")
    parser.add_argument("--reps", type=int, default=3)
    parser.add_argument("--base-threshold", type=int, default=32)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    cfg = GramConfig(base_threshold=args.base_threshold)
    backends = kernels.available_backends()

    print(f"backends: {', '.join(backends)}   reps: {args.reps} (median)")
    header = f"{'n':>6}" + "".join(f"{b + ' [s]':>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    try:
        for n in sizes:
            a = gen_matrix(n, n, seed=n)
            medians = {}
            for backend in backends:
                kernels.use_backend(backend)
                gram(gen_matrix(64, 64, seed=0), cfg)  # warm up
                medians[backend] = statistics.median(
                    time_once(a, cfg) for _ in range(args.reps))
            row = f"{n:>6}" + "".join(f"{medians[b]:>12.4f}" for b in backends)
            if len(backends) == 2:
                row += f"{medians['py'] / medians['c']:>10.2f}"
            print(row)
    finally:
        kernels.use_backend("auto")


if __name__ == "__main__":
    main()
