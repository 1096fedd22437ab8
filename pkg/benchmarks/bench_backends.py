"""Time the numba kernels against the pure-numpy mirrors.

Each workload runs once per backend to absorb JIT compilation, then the best
of --repeats timed runs is reported.  Invoke from the repo root:

    python3 benchmarks/bench_backends.py --size 301 --repeats 3
"""

import argparse
import time

import numpy as np

from tribrown import (
    EllipticParams,
    MeasureModel,
    PushforwardMap,
    fill_grid,
    fkdet_density_grid,
    solve_w0_grid,
    solve_w_reg_grid,
    transport,
)
from tribrown.backend import HAS_NUMBA


def bench_model():
    nodes = np.linspace(-1.5, 1.5, 12)
    return MeasureModel([(x, 1.0 / 12.0) for x in nodes], kind="selfadjoint")


def window(n):
    return (-2.5, 2.5, -1.8, 1.8), n, n


def make_workloads(n):
    model = bench_model()
    tri = EllipticParams(2.0, 1.0)
    circ = EllipticParams.from_t(1.0)
    bounds, nx, ny = window(n)
    xs = np.linspace(bounds[0], bounds[1], nx)
    ys = np.linspace(bounds[2], bounds[3], ny)
    lr = np.tile(xs, ny)
    li = np.repeat(ys, nx)

    src_bounds = (-1.6, 1.6, -1.6, 1.6)
    source = fill_grid(model, circ, 0.0, src_bounds, nx, ny)
    pmap = PushforwardMap(model, EllipticParams.from_t(1.0, 0.3))

    return [
        (f"w0 grid {nx}x{ny}",
         lambda b: solve_w0_grid(model, lr, li, 1.0, backend=b)),
        (f"w_reg grid {nx}x{ny}",
         lambda b: solve_w_reg_grid(model, lr, li, 1.0, 1e-3, backend=b)),
        (f"triangular density {nx}x{ny}",
         lambda b: fill_grid(model, tri, 0.0, bounds, nx, ny, backend=b)),
        (f"regularized density {nx}x{ny}",
         lambda b: fill_grid(model, circ, 1e-2, bounds, nx, ny, backend=b)),
        (f"fk determinant {nx}x{ny}",
         lambda b: fkdet_density_grid(model, 1.0, bounds, nx, ny, backend=b)),
        (f"transport+deposit {nx}x{ny}",
         lambda b: transport(pmap, source, bounds, nx, ny, backend=b)),
    ]


def best_time(fn, backend, repeats):
    fn(backend)  # warm-up / JIT compile
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(backend)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=301,
                        help="grid points per axis (default 301)")
    parser.add_argument("--repeats", type=int, default=3,
                        help="timed runs per workload (default 3)")
    args = parser.parse_args(argv)

    backends = ["numba", "numpy"] if HAS_NUMBA else ["numpy"]
    if not HAS_NUMBA:
        print("numba not importable; timing the numpy backend only")

    workloads = make_workloads(args.size)
    width = max(len(name) for name, _ in workloads)
    header = f"{'workload':<{width}}" + "".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, fn in workloads:
        times = [best_time(fn, b, args.repeats) for b in backends]
        row = f"{name:<{width}}" + "".join(f"{t:>11.4f}s" for t in times)
        if len(times) == 2:
            row += f"{times[1] / times[0]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
