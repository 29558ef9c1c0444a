"""Helpers shared by the solver-based experiments."""
from __future__ import annotations

import numpy as np

from ..hgroup import compose, gauge4, inverse
from ..solver.grid import grid_for_domain
from ..solver.scheme import Solution, solve_dirichlet


def run_solve(domain, A, f, g, hx: float, kappa: float = 2.0, t_focus=None, ht_max=None, growth: float = 1.15,
              box=None, backend=None, t_focus_hi=None) -> Solution:
    grid = grid_for_domain(domain, hx, kappa, t_focus=t_focus, ht_max=ht_max, growth=growth, box=box,
                           t_focus_hi=t_focus_hi)
    return solve_dirichlet(grid, domain, A, f, g, backend=backend)


def in_ball(pts: np.ndarray, center, r: float, closed: bool = False) -> np.ndarray:
    c = np.broadcast_to(np.asarray(center, float), pts.shape)
    g4 = gauge4(compose(inverse(c), pts))
    return g4 <= r ** 4 if closed else g4 < r ** 4


def ball_stats(sol: Solution, center, r: float):
    """(max, min, node count) of the interior values inside B_r(center)."""
    m = in_ball(sol.interior_points(), center, r)
    if not np.any(m):
        return np.nan, np.nan, 0
    v = sol.u[m]
    return float(v.max()), float(v.min()), int(m.sum())


def sup_norm(fn, pts) -> float:
    if fn is None:
        return 0.0
    if np.isscalar(fn):
        return abs(float(fn))
    return float(np.max(np.abs(fn(pts)))) if len(pts) else 0.0


def smooth_random_data(seed: int, terms: int = 4, offset: float = 0.0, amplitude: float = 1.0):
    """Deterministic smooth boundary data sum a_k sin(<w_k, z> + p_k) + offset."""
    rng = np.random.default_rng(seed)
    w = rng.normal(0, 1.5, (terms, 3))
    w[:, 2] *= 0.5
    a = rng.uniform(-1, 1, terms) * amplitude / terms
    p = rng.uniform(0, 2 * np.pi, terms)

    def g(z):
        z = np.atleast_2d(z)
        return offset + np.sum(a * np.sin(z @ w.T + p), axis=-1)

    return g
