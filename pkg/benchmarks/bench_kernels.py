"""Time the compiled and numpy stepping kernels on the Example-1 operator.

    python3 benchmarks/bench_kernels.py [--steps N] [--repeat R] [--dx DX]

Prints steps/second per backend for a pure Fokker-Planck run and for a
Zakai run (multiplicative update plus renormalization every step), and
checks the two backends agree.
"""
import argparse
import math
import time

import numpy as np

from levyfilter.fokker_planck import init_density
from levyfilter.kernels import BACKEND, advance
from levyfilter.levy import StableParams
from levyfilter.operator import Grid1D, assemble_operator, double_well


def bench(backend, m, p0, dt, steps, h, gain, dy, repeat):
    best, out = math.inf, None
    for _ in range(repeat):
        p = p0.copy()
        t0 = time.perf_counter()
        advance(m, p, dt, steps, h, gain, dy, 1 if gain is not None else 0, backend=backend)
        best = min(best, time.perf_counter() - t0)
        out = p
    return steps / best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=5000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--dx", type=float, default=0.05)
    args = ap.parse_args(argv)

    grid = Grid1D.from_spacing(-2.5, 2.5, args.dx)
    op = assemble_operator(grid, StableParams(1.5, math.sqrt(0.24)), double_well())
    dt = 1e-3 if args.dx >= 0.05 else 0.5 * 2.0 / np.max(np.abs(np.diag(op.entries)))
    p0 = init_density(grid, "gaussian", center=-1.0).values
    gain = grid.x / 0.05
    dy = np.random.default_rng(0).normal(0.0, math.sqrt(0.05 * dt), args.steps)

    backends = ["python"] + (["cython"] if BACKEND == "cython" else [])
    print(f"grid n={grid.n}, dt={dt:.3g}, steps={args.steps}, active backend: {BACKEND}")
    results = {}
    for label, g, d in (("fokker-planck", None, None), ("zakai", gain, dy)):
        for b in backends:
            rate, out = bench(b, op.entries, p0, dt, args.steps, grid.dx, g, d, args.repeat)
            results[label, b] = out
            print(f"{label:14s} {b:7s} {rate:12.0f} steps/s")
        if len(backends) == 2:
            diff = np.max(np.abs(results[label, "python"] - results[label, "cython"]))
            print(f"{label:14s} max backend difference {diff:.2e}")


if __name__ == "__main__":
    main()
