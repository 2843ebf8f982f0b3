"""Benchmark the compiled slotted-queue kernels against the pure-Python
reference backend.

Run:  python benchmarks/bench_kernels.py [--slots N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from cogcache import kernels
from cogcache.kernels import _reference


def _time(fn, *args, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--slots", type=int, default=1_000_000)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(0)
    arr = rng.poisson(2.4, size=args.slots)
    high = rng.poisson(1.1, size=args.slots)
    low = rng.poisson(0.9, size=args.slots)
    warmup = args.slots // 10

    print(f"active backend: {kernels.BACKEND}   slots: {args.slots:,}")
    rows = [
        ("single-class", kernels.single_class_slot_sim,
         _reference.single_class_slot_sim, (arr, 3, warmup, 1000, 1000)),
        ("two-class", kernels.two_class_slot_sim,
         _reference.two_class_slot_sim, (high, low, 3, warmup, 1000, 1000)),
    ]
    for name, fast, ref, a in rows:
        t_ref = _time(ref, *a)
        if fast is ref:
            print(f"{name:12s}  reference {t_ref*1e3:8.1f} ms  "
                  "(no compiled backend available)")
            continue
        t_fast = _time(fast, *a)
        print(f"{name:12s}  reference {t_ref*1e3:8.1f} ms   "
              f"compiled {t_fast*1e3:8.1f} ms   speedup {t_ref/t_fast:5.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
