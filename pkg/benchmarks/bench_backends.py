"""Benchmark the compiled Monte Carlo kernels against the numpy fallback.

Verifies that both backends produce bit-identical output on each workload,
then reports wall-clock times and the speedup.

    python benchmarks/bench_backends.py [--paths 200000] [--steps 26] [--repeat 3]
"""

import argparse
import time

import numpy as np

from tensorcast._kernels import get_backend, mc_py


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_normals(backend, n_paths, steps, seed=1):
    def run():
        for step in range(steps):
            backend.normals_block(seed, step, 0, 0, n_paths)

    return run


def bench_gbm(backend, n_paths, steps, seed=2):
    terminal = np.empty(n_paths)

    def run():
        backend.gbm_chunk(1.0, 0.0005, 0.2, 1.0, steps, seed, 0, n_paths, terminal)

    return run, terminal


def bench_coupled(backend, n_paths, steps, seed=3):
    terminal = np.empty(n_paths)

    def run():
        backend.coupled_chunk(
            1.0, -0.0011, 0.2, 0.2, -0.0011, 0.002, -0.26, 1.0, steps, seed, 0, n_paths, terminal
        )

    return run, terminal


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--paths", type=int, default=200_000)
    parser.add_argument("--steps", type=int, default=26)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    try:
        cy = get_backend("cython")
    except ImportError:
        raise SystemExit("compiled backend not built; run pip install -e . first")

    rows = []

    run_py = bench_normals(mc_py, args.paths, args.steps)
    run_cy = bench_normals(cy, args.paths, args.steps)
    a = mc_py.normals_block(1, 0, 0, 0, args.paths)
    b = cy.normals_block(1, 0, 0, 0, args.paths)
    assert np.array_equal(a, b), "backends disagree on draws"
    rows.append(("normals", _time(run_py, args.repeat), _time(run_cy, args.repeat)))

    run_py, term_py = bench_gbm(mc_py, args.paths, args.steps)
    run_cy, term_cy = bench_gbm(cy, args.paths, args.steps)
    run_py()
    py_copy = term_py.copy()
    run_cy()
    assert np.array_equal(py_copy, term_cy), "backends disagree on gbm terminals"
    rows.append(("gbm", _time(run_py, args.repeat), _time(run_cy, args.repeat)))

    run_py, term_py = bench_coupled(mc_py, args.paths, args.steps)
    run_cy, term_cy = bench_coupled(cy, args.paths, args.steps)
    run_py()
    py_copy = term_py.copy()
    run_cy()
    assert np.array_equal(py_copy, term_cy), "backends disagree on coupled terminals"
    rows.append(("coupled", _time(run_py, args.repeat), _time(run_cy, args.repeat)))

    draws = args.paths * args.steps
    print(f"\n{args.paths} paths x {args.steps} steps ({draws:.2e} draws), best of {args.repeat}")
    print(f"{'kernel':<10} {'numpy':>10} {'cython':>10} {'speedup':>9}")
    for name, t_py, t_cy in rows:
        print(f"{name:<10} {t_py:>9.3f}s {t_cy:>9.3f}s {t_py / t_cy:>8.1f}x")
    print("\nbit-identical outputs confirmed for all three kernels")


if __name__ == "__main__":
    main()
