#!/usr/bin/env python3
"""Time the numba kernels against the pure-numpy fallback.

Runs each hot kernel on representative workloads and prints a table of
per-call times plus the speedup. The kernels are imported side by side, so
this does not depend on MCFORGE_BACKEND.

Usage: python3 benchmarks/bench_backends.py [--repeats N]
"""

import argparse
import time

import numpy as np

from mcforge import _kernels_numpy as knp

try:
    from mcforge import _kernels_numba as knb
except ImportError:
    knb = None


def timeit(fn, args, repeats):
    fn(*args)  # warmup / JIT compile
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def workloads():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((16, 48, 48))
    k = rng.standard_normal((32, 16, 3, 3))
    b = rng.standard_normal(32)
    gy = rng.standard_normal((32, 48, 48))
    yield "conv2d_forward 16->32 @48", "conv2d_forward", (x, k, b)
    yield "conv2d_backward_input", "conv2d_backward_input", (gy, k)
    yield "conv2d_backward_params", "conv2d_backward_params", (gy, x)

    img = rng.random((64, 64))
    kx = rng.uniform(-0.5, 0.5, 4096)
    ky = rng.uniform(-0.5, 0.5, 4096)
    yield "dft_eval 4096 pts @64x64", "dft_eval", (img, kx, ky)

    grid = rng.standard_normal((128, 128)) + 1j * rng.standard_normal((128, 128))
    u = rng.uniform(0.0, 128.0, 4096)
    v = rng.uniform(0.0, 128.0, 4096)
    lut = np.i0(np.linspace(3.0, 0.0, 49153))
    yield "grid_interp 4096 pts", "grid_interp", (grid, u, v, 6.0, lut)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    print(f"{'workload':<28} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for label, name, call_args in workloads():
        t_np = timeit(getattr(knp, name), call_args, args.repeats)
        if knb is None:
            print(f"{label:<28} {t_np*1e3:>8.2f}ms {'n/a':>10} {'n/a':>8}")
            continue
        t_nb = timeit(getattr(knb, name), call_args, args.repeats)
        print(f"{label:<28} {t_np*1e3:>8.2f}ms {t_nb*1e3:>8.2f}ms {t_np/t_nb:>7.1f}x")
    if knb is None:
        print("numba unavailable; fallback timings only")


if __name__ == "__main__":
    main()
