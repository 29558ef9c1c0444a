"""Time assembly and a full Dirichlet solve on each kernel backend.

    python benchmarks/bench_kernels.py --resolution 8
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from heislab.domains import GaugeBall
from heislab.hcalc import coefficient_from_text
from heislab.solver.grid import grid_for_domain
from heislab.solver.kernels import COMPILED_AVAILABLE
from heislab.solver.scheme import discretize, solve


def _best(fn, repeat: int) -> float:
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench(backend: str, resolution: int, field: str, repeat: int):
    domain = GaugeBall((0.0, 0.0, 0.0), 1.0)
    grid = grid_for_domain(domain, 1.0 / resolution, 2.0)
    A = coefficient_from_text(field, 1)
    t_asm = _best(lambda: discretize(grid, domain, A, f=-1.0, backend=backend), repeat)
    prob = discretize(grid, domain, A, f=-1.0, backend=backend)
    t_solve = _best(lambda: solve(prob), repeat)
    return grid, t_asm, t_solve


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--resolution", type=int, default=8, help="hx = 1/N")
    p.add_argument("--field", default="rotating-anisotropy(1 1.3 1)")
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    backends = ["python"] + (["compiled"] if COMPILED_AVAILABLE else [])
    times = {}
    for b in backends:
        grid, t_asm, t_solve = bench(b, args.resolution, args.field, args.repeat)
        times[b] = t_asm + t_solve
        print(f"{b:9s} {grid.describe()}  assemble {t_asm:8.3f} s  solve {t_solve:8.3f} s")
    if len(times) == 2:
        print(f"speedup  {times['python'] / times['compiled']:.1f}x")


if __name__ == "__main__":
    main()
