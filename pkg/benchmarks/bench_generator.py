#!/usr/bin/env python3
"""Throughput comparison of the compiled kernels against the pure-numpy
fallbacks (the path CIMARK_DISABLE_NUMBA=1 selects).

Run:  python benchmarks/bench_generator.py [--rounds N]
"""

import argparse
import time

import numpy as np

from cimark import kernels
from cimark.kernels import (
    _ci_fill_np,
    _rank_batch_np,
    _xorshift_fill_np,
    ci_fill,
    rank_batch,
    xorshift_fill,
)


def best_of(fn, repeats=5):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_xorshift(nwords):
    def active():
        xorshift_fill(0x13579BDF, nwords)

    def fallback():
        out = np.empty(nwords, dtype=np.uint32)
        _xorshift_fill_np(0x13579BDF, out)

    return best_of(active), best_of(fallback), nwords * 4


def bench_ci(rounds, n=32, c=96):
    rng = np.random.default_rng(0)
    x0 = rng.integers(0, 2, size=n, dtype=np.uint8)

    def active():
        ci_fill(x0.copy(), 123, 456, c, rounds)

    def fallback():
        out = np.empty(rounds * n, dtype=np.uint8)
        _ci_fill_np(x0.copy(), 123, 456, c, out)

    return best_of(active), best_of(fallback), rounds * n // 8


def bench_rank(samples):
    rng = np.random.default_rng(1)
    mats = rng.integers(0, 1 << 32, size=(samples, 32), dtype=np.uint64)

    def active():
        rank_batch(mats, 32, 32)

    def fallback():
        _rank_batch_np(mats.copy(), 32, 32)

    return best_of(active), best_of(fallback), samples * 32 * 4


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rounds", type=int, default=200_000,
                        help="generator rounds per trial")
    args = parser.parse_args()

    label = "numba" if kernels.NUMBA_ENABLED else "numpy (numba disabled)"
    print(f"active kernel path: {label}")
    if not kernels.NUMBA_ENABLED:
        print("note: both columns run the numpy implementation; unset "
              "CIMARK_DISABLE_NUMBA and install numba to compare.")

    # warm-up (JIT compilation)
    xorshift_fill(1, 1024)
    ci_fill(np.ones(32, dtype=np.uint8), 1, 2, 96, 64)
    rank_batch(np.ones((4, 32), dtype=np.uint64), 32, 32)

    rows = [
        ("xorshift words", *bench_xorshift(args.rounds * 8)),
        ("generator rounds", *bench_ci(args.rounds)),
        ("gf2 rank 32x32", *bench_rank(args.rounds // 10)),
    ]
    print(f"\n{'kernel':<18}{'active':>12}{'fallback':>12}{'speedup':>10}{'active MB/s':>14}")
    for name, t_active, t_fallback, nbytes in rows:
        print(f"{name:<18}{t_active * 1e3:>10.1f}ms{t_fallback * 1e3:>10.1f}ms"
              f"{t_fallback / t_active:>9.1f}x{nbytes / t_active / 1e6:>13.1f}")


if __name__ == "__main__":
    main()
