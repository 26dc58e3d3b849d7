"""Time the numba and numpy variants of the hot kernels side by side.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each variant is warmed up once (numba compiles on first call) and then timed;
the script also checks that both variants return the same numbers.
"""
import argparse
import time

import numpy as np

from drumcorners.eigensolve.fem import _local_numba, _local_numpy, mesh_polygon
from drumcorners.geometry import BoundaryCondition, preset
from drumcorners.kernels import StraightBoundary, halfplane_evaluator, robin_from_neumann
from drumcorners.specfun import _kiv_plan, _kiv_trap_numba, _kiv_trap_numpy


def timeit(fn, repeat):
    fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kiv(repeat):
    mus = np.linspace(0.0, 40.0, 400)
    x = 1.3
    plans = [(m, _kiv_plan(m, x)) for m in mus]

    def run(kern):
        return np.array([kern(m, x, *p) for m, p in plans])

    a, b = run(_kiv_trap_numba), run(_kiv_trap_numpy)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-300)
    return timeit(lambda: run(_kiv_trap_numba), repeat), timeit(lambda: run(_kiv_trap_numpy), repeat)


def bench_assembly(repeat):
    mesh = mesh_polygon(preset("gww1"), 1 / 32)
    v, t = mesh.vertices, mesh.triangles
    a, b = _local_numba(v, t), _local_numpy(v, t)
    for x, y in zip(a, b):
        assert np.allclose(x, y)
    return timeit(lambda: _local_numba(v, t), repeat), timeit(lambda: _local_numpy(v, t), repeat)


def bench_duhamel(repeat):
    HN = halfplane_evaluator(BoundaryCondition.neumann())
    z = np.array([0.0, 0.5])
    args = (HN, 1.0, StraightBoundary(), 0.1, z, z)
    a = robin_from_neumann(*args, M=12, impl="numba").value
    b = robin_from_neumann(*args, M=12, impl="numpy").value
    assert abs(a - b) <= 1e-13 * abs(a)
    return (timeit(lambda: robin_from_neumann(*args, M=12, impl="numba"), repeat),
            timeit(lambda: robin_from_neumann(*args, M=12, impl="numpy"), repeat))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"{'kernel':<28}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for name, fn in (("K_{i mu} trapezoid x400", bench_kiv), ("P1 local matrices (gww1)", bench_assembly),
                     ("Duhamel series M=12", bench_duhamel)):
        tn, tp = fn(args.repeat)
        print(f"{name:<28}{tn:>12.4f}{tp:>12.4f}{tp / tn:>10.1f}")


if __name__ == "__main__":
    main()
