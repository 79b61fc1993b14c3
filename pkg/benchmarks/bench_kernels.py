"""Compiled versus pure-Python kernels on typical workloads.

Run with ``python benchmarks/bench_kernels.py [--repeat N]``. Prints the
mean time per call for each kernel and backend, and the speedup.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from covlink import kernels


def _workloads(rng):
    cx, cy = rng.random(2), rng.random(2)
    rad = np.full(2, 0.45)
    # region table: 60 lenses and disks for triple emptiness tests
    m = 60
    tcx = rng.random(2 * m)
    tcy = rng.random(2 * m)
    trad = rng.uniform(0.2, 0.4, 2 * m)
    toff = np.arange(0, 2 * m + 1, 2, dtype=np.int64)
    tmg = rng.uniform(0.0, 0.2, m)
    tuples = np.array([rng.choice(m, 3, replace=False) for _ in range(200)], dtype=np.int64)
    # separation: 3 facilities on a line, two points per class
    pts = np.array([[0.0, 0.0], [0.1, 0.05], [0.5, 0.0], [0.55, 0.1], [1.0, 0.0], [1.05, 0.05]])
    fcx, fcy = pts[:, 0].copy(), pts[:, 1].copy()
    frad = np.full(6, 0.12)
    foff = np.array([0, 2, 4, 6], dtype=np.int64)
    ej = np.array([0, 1], dtype=np.int64)
    ek = np.array([1, 2], dtype=np.int64)
    x0 = np.array([0.05, 0.02, 0.52, 0.05, 1.02, 0.02])
    bnd = (0.5, 0.03, 0.7)

    return {
        "project_disks": lambda b: b.project_disks(cx, cy, rad, 2.0, 2.0),
        "emptiness_batch(200)": lambda b: b.emptiness_batch(tcx, tcy, trad, toff, tmg, tuples,
                                                           1e-9, 20000),
        "rho_solve(infeasible)": lambda b: b.rho_solve(fcx, fcy, frad, foff, bnd, ej, ek, 0.2,
                                                     x0, 1e-6, False, 100000),
        "rho_solve(decide)": lambda b: b.rho_solve(fcx, fcy, frad, foff, bnd, ej, ek, 0.3, x0,
                                                 1e-6, True, 100000),
    }


def _time(fn, repeat):
    fn()
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    work = _workloads(np.random.default_rng(0))
    pure = kernels.get_backend("pure")
    comp = kernels.get_backend("compiled") if kernels.compiled_available() else None
    print(f"{'kernel':<24} {'pure_ms':>10} {'compiled_ms':>12} {'speedup':>8}")
    for name, fn in work.items():
        tp = _time(lambda: fn(pure), args.repeat)
        if comp is None:
            print(f"{name:<24} {tp * 1e3:>10.4f} {'-':>12} {'-':>8}")
            continue
        tc = _time(lambda: fn(comp), args.repeat)
        print(f"{name:<24} {tp * 1e3:>10.4f} {tc * 1e3:>12.4f} {tp / tc:>8.1f}")


if __name__ == "__main__":
    main()
