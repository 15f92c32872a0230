"""Compiled vs pure-Python sweep kernel.

Times a fixed number of Gauss-Seidel sweeps on the same problem with both
backends and checks that the iterates agree.  Run with::

    python3 benchmarks/bench_kernels.py [--grid 33] [--sweeps 20] [--json out.json]
"""

import argparse
import json
import time

import numpy as np

from subeq import _pykernel, kernels
from subeq.catalog import Pq, laplace, special_lagrangian
from subeq.geometry import builtin_metric
from subeq.grid import Grid, GridFunction
from subeq.solver import SolveConfig, _assemble, _sweep, initial_guess

CASES = {
    "laplace": lambda: laplace(2),
    "Pq(2,1)": lambda: Pq(2, 1),
    "special_lagrangian(2,0)": lambda: special_lagrangian(2, 0.0),
}


def run_sweeps(mod, F, grid, phi, sweeps):
    prob = _assemble(F, builtin_metric("euclidean(2)"), grid, "auto")
    u = np.ascontiguousarray(initial_guess(phi).reshape(-1))
    dlast = np.ones(len(prob.nodes))
    cfg = SolveConfig()
    t0 = time.perf_counter()
    for s in range(sweeps):
        _sweep(mod, u, prob, dlast, cfg, s == 0, 1e-13)
    return time.perf_counter() - t0, u


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=int, default=33)
    ap.add_argument("--sweeps", type=int, default=20)
    ap.add_argument("--json")
    args = ap.parse_args(argv)
    grid = Grid([0, 0], [1, 1], [args.grid, args.grid])
    phi = GridFunction.from_callable(grid, lambda x: x[0] ** 2 - x[1] ** 2)
    compiled = kernels.get("compiled") if kernels.BACKEND == "compiled" else None
    rows = []
    print(f"{'case':<26}{'python [s]':>12}{'compiled [s]':>14}{'speedup':>10}{'max diff':>12}")
    for name, make in CASES.items():
        F = make()
        tp, up = run_sweeps(_pykernel, F, grid, phi, args.sweeps)
        if compiled is None:
            tc, diff = float("nan"), float("nan")
        else:
            tc, uc = run_sweeps(compiled, F, grid, phi, args.sweeps)
            diff = float(np.max(np.abs(up - uc)))
        rows.append({"case": name, "python": tp, "compiled": tc, "speedup": tp / tc, "max_diff": diff})
        print(f"{name:<26}{tp:>12.4f}{tc:>14.4f}{tp / tc:>10.1f}{diff:>12.2e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"grid": args.grid, "sweeps": args.sweeps, "rows": rows}, fh, indent=2)


if __name__ == "__main__":
    main()
