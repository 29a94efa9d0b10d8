"""Compiled vs pure-Python DOP853 kernels on the workloads the solver runs.

    python benchmarks/bench_kernels.py [--repeat 3] [--quick]

Each workload is run through both backends; results must be bit-identical,
and the table reports best-of-N wall time and the speedup.
"""
import argparse
import math
import time

import numpy as np

from perbif import _kernels_py

try:
    from perbif import _kernels
except ImportError:  # pragma: no cover
    _kernels = None


def workloads(quick):
    two_pi = 2.0 * math.pi
    b = 1.2847287729402382e-13          # branch-1 minimum at q=3, mu=100
    mu_hi = 10.0 if quick else 100.0
    grid = 128 if quick else 1024
    cells = np.column_stack([1.0 + 0.4 * np.cos(np.linspace(0, two_pi, grid, endpoint=False)),
                             0.3 * np.sin(np.linspace(0, two_pi, grid, endpoint=False))])
    return [
        ("shooting residual (variational, q=3 mu=3)",
         lambda K: K.advance(3.0, 3.0, [0.0245, 0.0, 1.0, 0.0, 0.0, 1.0], 0.0, math.pi,
                             1e-13, 1e-17)),
        (f"near-homoclinic half orbit (mu={mu_hi:g})",
         lambda K: K.advance(3.0, mu_hi, [b, 0.0, 1.0, 0.0, 0.0, 1.0], 0.0, math.pi,
                             1e-13, 1e-27)),
        (f"profile with {grid // 2 + 1} landing times",
         lambda K: K.dop853(3.0, 3.0, [0.0245, 0.0], 0.0, math.pi, 1e-13, 1e-17, math.inf,
                            np.linspace(0.0, math.pi, grid // 2 + 1), False)[3]),
        (f"{grid} one-cell re-integrations",
         lambda K: K.advance_cells(3.0, 3.0, cells, np.full(grid, two_pi / grid),
                                   1e-14, 1e-16)[1]),
    ]


def best_time(fn, repeat):
    best = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="smaller workloads")
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled kernel not built; only the Python backend is available")
    print(f"{'workload':48s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}  identical")
    for name, fn in workloads(args.quick):
        t_py, r_py = best_time(lambda: fn(_kernels_py), max(1, args.repeat // 2))
        if _kernels is None:
            print(f"{name:48s} {1e3 * t_py:12.2f} {'-':>12s} {'-':>8s}  -")
            continue
        t_c, r_c = best_time(lambda: fn(_kernels), args.repeat)
        same = np.array_equal(np.asarray(r_py[1] if isinstance(r_py, tuple) else r_py),
                              np.asarray(r_c[1] if isinstance(r_c, tuple) else r_c))
        print(f"{name:48s} {1e3 * t_py:12.2f} {1e3 * t_c:12.3f} {t_py / t_c:8.1f}  {same}")


if __name__ == "__main__":
    main()
