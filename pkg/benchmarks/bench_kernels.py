"""Compare the compiled kernels against the pure numpy/scipy backend.

Run:  python benchmarks/bench_kernels.py [--size 256] [--repeats 5]

Workloads mirror one ingest step at the given frame size: background
subtraction with model update, persistence accumulation, connected-component
labeling and 100 optical-flow iterations.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from vidsieve.kernels import available_backends


def timed(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def workloads(size: int, rng):
    frame = rng.integers(0, 256, (size, size, 3), dtype=np.uint8)
    background = rng.uniform(0, 255, (size, size, 3))
    mask = (rng.random((size, size)) < 0.08).astype(np.uint8)
    acc = np.zeros((size, size), dtype=np.int32)
    ix = rng.standard_normal((size, size))
    iy = rng.standard_normal((size, size))
    it = rng.standard_normal((size, size))

    def bench_subtract(impl):
        bg = background.copy()
        return lambda: impl.subtract_and_update(bg, frame, 20.0, 0.05)

    def bench_persistence(impl):
        a = acc.copy()
        return lambda: impl.update_persistence(mask, a)

    def bench_label(impl):
        return lambda: impl.label_components(mask)

    def bench_flow(impl):
        u = np.zeros_like(ix)
        v = np.zeros_like(ix)
        return lambda: impl.horn_schunck_iterate(ix, iy, it, u, v, 1.0, 100)

    return {
        "background subtract + update": bench_subtract,
        "persistence accumulate": bench_persistence,
        "connected components": bench_label,
        "flow relaxation (100 iters)": bench_flow,
    }


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--size", type=int, default=256)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    backends = available_backends()
    if "native" not in backends:
        print("compiled kernels not built; showing pure backend only")
    rng = np.random.default_rng(0)
    benches = workloads(args.size, rng)

    name_w = max(len(n) for n in benches) + 2
    header = f"{'kernel'.ljust(name_w)}" + "".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(f"frame size {args.size}x{args.size}, best of {args.repeats}\n")
    print(header)
    print("-" * len(header))
    for name, make in benches.items():
        times = {b: timed(make(impl), args.repeats) for b, impl in backends.items()}
        row = name.ljust(name_w) + "".join(
            f"{times[b] * 1e3:>10.2f}ms" for b in backends
        )
        if "native" in times and "pure" in times:
            row += f"{times['pure'] / times['native']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
