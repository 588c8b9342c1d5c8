"""Time the compiled kernels against the pure-Python fallback.

Both backends consume the same random stream, so each pair of timings covers
an identical run.  Usage::

    python benchmarks/bench_backends.py [--repeat 3]
"""
import argparse
import time

import numpy as np

from edabench import _backend
from edabench.algorithms import OptimizerConfig, run
from edabench.fitness import DLB

CASES = [
    ("opo_ea", OptimizerConfig("opo_ea"), 40, 200_000),
    ("comma_ga", OptimizerConfig("comma_ga", mu=4, lam=36), 40, 200_000),
    ("umda", OptimizerConfig("umda", mu=200, lam=2400), 40, 200_000),
    ("mimic", OptimizerConfig("mimic", mu=200, lam=2400), 40, 100_000),
]


def time_case(config, n, budget, backend, repeat):
    best = float("inf")
    for seed in range(repeat):
        rng = np.random.Generator(np.random.PCG64(seed))
        t0 = time.perf_counter()
        out = run(config, DLB, n, budget, rng, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, out.evaluations


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not _backend.NATIVE_AVAILABLE:
        print("compiled extension not built; only the pure backend is available")
    print(f"{'case':10s} {'n':>4s} {'evals':>8s} {'pure s':>9s} {'native s':>9s} {'speedup':>8s}")
    for name, config, n, budget in CASES:
        pure, evals = time_case(config, n, budget, "pure", args.repeat)
        if _backend.NATIVE_AVAILABLE:
            native, _ = time_case(config, n, budget, "native", args.repeat)
            print(f"{name:10s} {n:4d} {evals:8d} {pure:9.3f} {native:9.3f} {pure / native:7.1f}x")
        else:
            print(f"{name:10s} {n:4d} {evals:8d} {pure:9.3f} {'-':>9s} {'-':>8s}")


if __name__ == "__main__":
    main()
