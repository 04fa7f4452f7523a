"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel is called once before timing so JIT compilation is excluded.
Outputs are compared as well, since a fast wrong kernel is no use.
"""
import argparse
import time

import numpy as np

from hexkpp import _kernels as K


def best_of(fn, args, repeat):
    fn(*args)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def cases():
    rng = np.random.default_rng(0)
    field = rng.random((241, 241))
    h = rng.random(6001)
    pad = 53
    padded = rng.random(6001 + 2 * pad)
    offsets = np.array([50, 24, -26, -51, -25, 25], dtype=np.int64)
    fracs = rng.random(6)
    return [
        ("exp_scan n=6001", K.exp_scan_numba, K.exp_scan_numpy, (h, 0.95, 0.02, 0.03, 0.1)),
        ("shift_sum n=6001", K.shift_sum_numba, K.shift_sum_numpy,
         (padded, pad, offsets, fracs, 6001)),
        ("hex_laplacian 241x241", K.hex_laplacian_numba, K.hex_laplacian_numpy,
         (field, False)),
        ("rk4_logistic_step 241x241", K.rk4_logistic_step_numba, K.rk4_logistic_step_numpy,
         (field, 200.0, 5e-4, False)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if not K.HAVE_NUMBA:
        print("numba unavailable or disabled; the *_numba names run as plain Python")
    print(f"{'kernel':28s} {'numba ms':>10s} {'numpy ms':>10s} {'speedup':>8s}  max|diff|")
    for name, fast, slow, a in cases():
        tf = best_of(fast, a, args.repeat)
        ts = best_of(slow, a, args.repeat)
        diff = float(np.max(np.abs(fast(*a) - slow(*a))))
        print(f"{name:28s} {tf * 1e3:10.3f} {ts * 1e3:10.3f} {ts / tf:8.1f}  {diff:.1e}")


if __name__ == "__main__":
    main()
