"""Time the numba and numpy kernel implementations on representative inputs.

    python benchmarks/bench_kernels.py [--repeat 5] [--dim-b 40]

The first numba call (JIT compilation) is timed separately and excluded from
the steady-state numbers.
"""
import argparse
import time
import timeit

import numpy as np

from modumech import kernels
from modumech.dynamics import _mech_ops


def coupling_inputs(dim_a, dim_b, n_steps, rng):
    psi = rng.normal(size=(dim_a, dim_b, 1)) + 1j * rng.normal(size=(dim_a, dim_b, 1))
    X, _ = _mech_ops(dim_b)
    x, V = np.linalg.eigh(X)
    betas = 0.01 * np.exp(1j * rng.uniform(0, 2 * np.pi, n_steps))
    return psi, np.arange(dim_a, dtype=float), x, V, betas


def grape_inputs(dim_a, dim_b, n_seg, rng):
    X, nd = _mech_ops(dim_b)
    psi0 = rng.normal(size=(dim_a, dim_b)) + 1j * rng.normal(size=(dim_a, dim_b))
    tgt = rng.normal(size=(dim_a, dim_b)) + 1j * rng.normal(size=(dim_a, dim_b))
    return (rng.uniform(0, np.pi, n_seg), rng.uniform(0, 10 * np.pi, n_seg), 1.0 / n_seg, 0.0,
            np.arange(dim_a, dtype=float), psi0, tgt, X, nd)


def bench(name, impls, args, repeat):
    print(f"\n{name}")
    results = {}
    for label, fn in impls.items():
        t0 = time.perf_counter()
        fn(*args)
        first = time.perf_counter() - t0
        best = min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))
        results[label] = best
        print(f"  {label:<6} first call {first * 1e3:9.2f} ms   best of {repeat} {best * 1e3:9.3f} ms")
    if len(results) == 2:
        print(f"  speedup numba/numpy: {results['numpy'] / results['numba']:.2f}x")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--dim-a", type=int, default=3)
    ap.add_argument("--dim-b", type=int, default=40)
    ap.add_argument("--steps", type=int, default=4000, help="coupling steps per sweep")
    ap.add_argument("--segments", type=int, default=15, help="control segments")
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    print(f"default backend: {kernels.BACKEND} (numba available: {kernels.HAS_NUMBA})")
    cs = {"numpy": kernels.coupling_sweep_numpy}
    gs = {"numpy": kernels.grape_sweep_numpy}
    if kernels.HAS_NUMBA:
        cs["numba"] = kernels.coupling_sweep_numba
        gs["numba"] = kernels.grape_sweep_numba
    bench(f"coupling_sweep dims=({args.dim_a},{args.dim_b}) steps={args.steps}", cs,
          coupling_inputs(args.dim_a, args.dim_b, args.steps, rng), args.repeat)
    bench(f"grape_sweep dims=({args.dim_a},{args.dim_b}) segments={args.segments}", gs,
          grape_inputs(args.dim_a, args.dim_b, args.segments, rng), args.repeat)


if __name__ == "__main__":
    main()
