"""Benchmark the numba stencil kernel against the pure-numpy fallback.

Times the raw masked stencil application and a representative full condenser
solve on both backends.  The active default backend follows the
``TREECAP_NO_NUMBA`` environment flag; this script exercises both
implementations explicitly regardless of the flag.

Run with:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

import treecap
from treecap import _kernels
from treecap.disc import (
    CondenserProblem,
    SolverGrid,
    _conductances,
    _radial_nodes,
    solve,
)


def time_stencil(apply_fn, repeats=200):
    rho = _radial_nodes(0.5, 200, 1024)
    kr, kt = _conductances(rho, 1024)
    rng = np.random.default_rng(0)
    u = rng.normal(size=(201, 1024))
    free = np.ones_like(u, dtype=bool)
    free[0, :] = False
    out = np.empty_like(u)
    apply_fn(u, out, kr, kt, free)  # warm up (JIT compile, page-in)
    start = time.perf_counter()
    for _ in range(repeats):
        apply_fn(u, out, kr, kt, free)
    return (time.perf_counter() - start) / repeats


def time_solve(backend_fn):
    original = _kernels.apply_masked
    _kernels.apply_masked = backend_fn
    try:
        problem = CondenserProblem.from_set(treecap.prefix_set(0.5), 0.5)
        grid = SolverGrid(n_angular=512, n_radial=100)
        start = time.perf_counter()
        solution = solve(problem, grid)
        return time.perf_counter() - start, solution
    finally:
        _kernels.apply_masked = original


def main():
    print(f"default backend: {_kernels.backend_name()}")
    backends = [("numpy", _kernels._apply_masked_numpy)]
    if _kernels._HAVE_NUMBA:
        backends.append(("numba", _kernels._apply_masked_numba))
    else:
        print("numba unavailable (or disabled via TREECAP_NO_NUMBA); "
              "timing the numpy path only")

    stencil_times = {}
    for name, fn in backends:
        stencil_times[name] = time_stencil(fn)
        print(f"stencil apply [{name:5s}]: {stencil_times[name] * 1e3:8.3f} ms "
              f"(1024 x 201 grid)")

    solve_times = {}
    for name, fn in backends:
        elapsed, solution = time_solve(fn)
        solve_times[name] = elapsed
        print(f"half-circle solve [{name:5s}]: {elapsed:8.2f} s "
              f"({solution.iterations} iterations, capacity {solution.capacity:.6f})")

    if len(backends) == 2:
        print(f"stencil speedup numba/numpy: "
              f"{stencil_times['numpy'] / stencil_times['numba']:.2f}x")
        print(f"solve speedup   numba/numpy: "
              f"{solve_times['numpy'] / solve_times['numba']:.2f}x")


if __name__ == "__main__":
    main()
