#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallbacks.

Runs each hot kernel on representative desk-scale workloads and prints the
per-call timings plus the speedup.  The numba path is what
``QPFLOW_BACKEND`` selects by default; the numpy path is what you get with
``QPFLOW_BACKEND=numpy`` or without numba installed.

    python3 benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from qpflow import _kernels

if not _kernels.USING_NUMBA:
    raise SystemExit(
        "numba backend is inactive (QPFLOW_BACKEND=numpy or numba missing); "
        "nothing to compare"
    )


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_pauli_exp(repeats):
    rng = np.random.default_rng(0)
    n = 12
    amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    amps = np.ascontiguousarray(amps / np.linalg.norm(amps))
    out = np.empty_like(amps)
    flip, sign = np.int64(0b101010101010), np.int64(0b011001100110)
    fac = 0.3 + 0.2j
    calls = 200

    def run(impl):
        def body():
            for _ in range(calls):
                impl(amps, flip, sign, 0.9, fac, out)

        return body

    t_nb = timeit(run(_kernels._pauli_exp_apply_nb), repeats) / calls
    t_np = timeit(run(_kernels._pauli_exp_apply_np), repeats) / calls
    return "pauli_exp_apply (n=12)", t_nb, t_np


def bench_coefficients(repeats):
    rng = np.random.default_rng(1)
    n = 6
    a = rng.normal(size=(1 << n, 1 << n)) + 1j * rng.normal(size=(1 << n, 1 << n))
    a = np.ascontiguousarray(a + a.conj().T)
    coeffs = np.empty(4**n)

    t_nb = timeit(lambda: _kernels._pauli_coefficients_nb(a, n, coeffs), repeats)
    t_np = timeit(lambda: _kernels._pauli_coefficients_np(a, n, coeffs), repeats)
    return "pauli_coefficients (n=6)", t_nb, t_np


def bench_sampling(repeats):
    rng = np.random.default_rng(2)
    n = 6
    amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    amps = np.ascontiguousarray(amps / np.linalg.norm(amps))
    count = 100_000
    bases = rng.integers(0, 3, size=(count, n)).astype(np.uint8)
    unif = rng.random(count)
    out = np.empty(count, dtype=np.int64)

    t_nb = timeit(lambda: _kernels._sample_snapshots_nb(amps, n, bases, unif, out), repeats)
    t_np = timeit(lambda: _kernels._sample_snapshots_np(amps, n, bases, unif, out), repeats)
    return "sample_snapshots (n=6, 1e5 shots)", t_nb, t_np


def bench_estimates(repeats):
    rng = np.random.default_rng(3)
    n = 6
    count = 100_000
    bases = rng.integers(0, 3, size=(count, n)).astype(np.uint8)
    outcomes = rng.integers(0, 1 << n, size=count).astype(np.int64)
    letters = np.array([3, 3, 0, 0, 1, 2], dtype=np.uint8)
    out = np.empty(count)

    t_nb = timeit(lambda: _kernels._pauli_estimates_nb(bases, outcomes, letters, n, out), repeats)
    t_np = timeit(lambda: _kernels._pauli_estimates_np(bases, outcomes, letters, n, out), repeats)
    return "pauli_estimates (1e5 snapshots)", t_nb, t_np


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    benches = (bench_pauli_exp, bench_coefficients, bench_sampling, bench_estimates)
    print(f"{'kernel':<36} {'numba':>12} {'numpy':>12} {'speedup':>9}")
    for bench in benches:
        label, t_nb, t_np = bench(args.repeats)
        print(f"{label:<36} {t_nb * 1e3:>10.3f}ms {t_np * 1e3:>10.3f}ms {t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
