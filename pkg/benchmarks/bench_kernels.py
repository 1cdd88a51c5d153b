#!/usr/bin/env python3
"""Time the hot kernels on both backends (numba loop vs numpy fallback).

Runs in one process: the loop variants are called directly (jitted when the
numba backend is active, plain Python otherwise), so run this once with each
backend to see all four combinations:

    python benchmarks/bench_kernels.py
    HYBRIDBLOCKS_BACKEND=numpy python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from hybridblocks import backend, kernels
from hybridblocks.rng import Generator


def timeit(fn, repeats=5):
    fn()  # warm (JIT compile / cache priming)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_fft(n=4096, frames=64):
    rng = np.random.default_rng(0)
    x = rng.normal(size=(frames, n)) + 1j * rng.normal(size=(frames, n))

    def loop_path():
        for row in x:
            a = row.copy()
            with np.errstate(all="ignore"):
                kernels.fft_core_loop(a)

    def numpy_path():
        for row in x:
            a = row.copy()
            kernels.fft_core_numpy(a)

    return timeit(loop_path), timeit(numpy_path)


def bench_fir(n=200_000, taps=101):
    rng = np.random.default_rng(1)
    x = rng.normal(size=n)
    t = rng.normal(size=taps)

    def loop_path():
        out = np.empty(n - taps + 1)
        kernels.convolve_valid_loop(x, t, out)

    def numpy_path():
        kernels.convolve_valid_numpy(x, t)

    return timeit(loop_path), timeit(numpy_path)


def bench_rng(n=500_000):
    def loop_path():
        st = np.array([1, 2, 3, 4], dtype=np.uint64)
        cache = np.zeros(2)
        out = np.empty(n)
        with np.errstate(over="ignore"):
            kernels.rng_fill_loop(st, cache, out)

    def python_path():
        st = np.array([1, 2, 3, 4], dtype=np.uint64)
        cache = np.zeros(2)
        out = np.empty(n // 10)  # plain Python is slow; keep it short
        kernels.rng_fill_python(st, cache, out)

    return timeit(loop_path, 3), timeit(python_path, 3) * 10  # normalize per-sample


def main():
    print(f"active backend: {backend.backend_name()}")
    loop_label = "numba @njit" if backend.using_numba else "python loop"

    f_loop, f_np = bench_fft()
    print(f"fft      64x4096   {loop_label}: {f_loop * 1e3:8.2f} ms   numpy: {f_np * 1e3:8.2f} ms")

    c_loop, c_np = bench_fir()
    print(f"fir      200k/101  {loop_label}: {c_loop * 1e3:8.2f} ms   numpy: {c_np * 1e3:8.2f} ms")

    r_loop, r_py = bench_rng()
    print(f"normals  500k      {loop_label}: {r_loop * 1e3:8.2f} ms   python: {r_py * 1e3:8.2f} ms (scaled)")

    g = Generator(0)
    t0 = time.perf_counter()
    g.normals(1_000_000)
    print(f"Generator.normals(1e6) via dispatch: {(time.perf_counter() - t0) * 1e3:.2f} ms")


if __name__ == "__main__":
    main()
