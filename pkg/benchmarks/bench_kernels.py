"""Benchmark the pair-table kernels: numba-compiled loops vs numpy.

Both hot kernels build dense difference-quotient tables over eigenvalue
pairs.  This script times the compiled and the vectorized paths across
matrix orders and prints one row per (kernel, order) with the speedup.
Run from the repository root:

    python benchmarks/bench_kernels.py [--sizes 4,8,16,32,64] [--repeats 200]
"""

import argparse
import time

import numpy as np

from sdnop import _kernels


def _time(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench(sizes, repeats, seed):
    rng = np.random.RandomState(seed)
    rows = []
    for p in sizes:
        lam = np.sort(rng.randn(p))[::-1].copy()
        zero_mask = np.abs(lam) < 0.2
        tau = 0.5
        kink_flags = np.zeros(p, dtype=np.int8)

        pairs = [("psd_pair_table",
                  _kernels.psd_pair_table_numpy, (lam, zero_mask),
                  _kernels.psd_pair_table_jit, (lam, zero_mask)),
                 ("soft_pair_table",
                  _kernels.soft_pair_table_numpy, (lam, tau, kink_flags),
                  _kernels.soft_pair_table_jit, (lam, tau, kink_flags))]
        for name, np_fn, np_args, jit_fn, jit_args in pairs:
            t_numpy = _time(np_fn, np_args, repeats)
            if jit_fn is None:
                rows.append((name, p, t_numpy, float("nan"), float("nan")))
                continue
            jit_fn(*jit_args)  # compile outside the timer
            t_jit = _time(jit_fn, jit_args, repeats)
            rows.append((name, p, t_numpy, t_jit, t_numpy / t_jit))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="4,8,16,32,64",
                        help="comma-separated matrix orders")
    parser.add_argument("--repeats", type=int, default=200,
                        help="timing repetitions (best of)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    sizes = [int(tok) for tok in args.sizes.split(",") if tok.strip()]

    if not _kernels.HAS_NUMBA:
        print("numba unavailable; timing the numpy path only")
    print(f"{'kernel':<18} {'order':>5} {'numpy [us]':>11} "
          f"{'numba [us]':>11} {'speedup':>8}")
    for name, p, t_np, t_jit, speedup in bench(sizes, args.repeats,
                                               args.seed):
        print(f"{name:<18} {p:>5} {t_np * 1e6:>11.2f} "
              f"{t_jit * 1e6:>11.2f} {speedup:>8.2f}")


if __name__ == "__main__":
    main()
