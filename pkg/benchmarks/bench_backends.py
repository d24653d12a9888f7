#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times end-to-end segmentation for each method on a synthetic image, once
per backend, and reports medians plus the speedup ratio.

Run: python3 benchmarks/bench_backends.py --size 512 --k 600 --repeats 5
"""

import argparse
import importlib.util
import time

import numpy as np

from powerslic import kernels, pipeline


def make_image(size, seed=0):
    rng = np.random.default_rng(seed)
    base = rng.random((size // 16, size // 16, 3))
    img = np.kron(base, np.ones((16, 16))[..., None])
    img += rng.random((size, size, 3)) * 0.05
    return np.clip(img, 0.0, 1.0)


def timed(fn, repeats):
    fn()  # warmup: JIT compilation and allocator caches
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times)) * 1000.0


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=512, help="image side length")
    parser.add_argument("--k", type=int, default=600, help="superpixel count")
    parser.add_argument("--repeats", type=int, default=5, help="timed runs per cell")
    parser.add_argument(
        "--methods", default="slic,power,optimal", help="comma separated methods"
    )
    args = parser.parse_args()

    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    img = make_image(args.size)
    backends = ["numpy"]
    if importlib.util.find_spec("numba") is not None:
        backends.append("numba")
    else:
        print("numba not installed, timing the numpy fallback only")

    print(f"image {args.size}x{args.size}, k={args.k}, median of {args.repeats}")
    print(f"{'method':<10}" + "".join(f"{b + ' (ms)':>14}" for b in backends) + f"{'speedup':>10}")
    for method in methods:
        row = {}
        for backend in backends:
            prev = kernels.set_backend(backend)
            try:
                row[backend] = timed(
                    lambda: pipeline.segment(img, method, args.k), args.repeats
                )
            finally:
                kernels._active = prev
        line = f"{method:<10}" + "".join(f"{row[b]:>14.2f}" for b in backends)
        if len(backends) == 2:
            line += f"{row['numpy'] / row['numba']:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
