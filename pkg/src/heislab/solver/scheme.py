"""Monotone discretization of L_A u = f with Dirichlet data, and its solve.

Each interior node z gets the second differences

    mu_k [u(z + h w_k) - 2 u(z) + u(z - h w_k)] / h^2,

where A(z) = sum_k mu_k xi_k xi_k^T with mu_k >= 0 and w_k is the horizontal
lift (xi_k, 2 <J x, xi_k>) of xi_k.  Feet off the grid are interpolated
linearly, so every off-diagonal weight is nonnegative.  Nodes outside the
domain that some foot touches carry Dirichlet values evaluated at the node.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..domains import Domain
from ..errors import GridTooSmall, InvalidScenario, SolverFailure
from .grid import Grid
from .kernels import get_backend

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-9


def _evaluate(fn, pts):
    if fn is None:
        return np.zeros(len(pts))
    if np.isscalar(fn):
        return np.full(len(pts), float(fn))
    return np.asarray(fn(pts), float).reshape(len(pts))


@dataclass
class DiscreteProblem:
    grid: Grid
    interior: np.ndarray  # flat node indices, sorted
    dirichlet: np.ndarray  # flat node indices, sorted
    W: sp.csr_matrix  # interior rows x active columns, entries >= 0
    diag: np.ndarray  # positive diagonal of -L
    f: np.ndarray
    g: np.ndarray
    backend: str

    @property
    def n_interior(self) -> int:
        return len(self.interior)

    @property
    def active(self) -> np.ndarray:
        return np.concatenate([self.interior, self.dirichlet])

    def system(self):
        """(M, b) with M = diag - W_interior and b = W_dirichlet g - f."""
        m = self.n_interior
        Wi = self.W[:, :m]
        Wd = self.W[:, m:]
        M = (sp.diags(self.diag) - Wi).tocsr()
        b = Wd @ self.g - self.f
        return M, b

    def operator_rows(self) -> sp.csr_matrix:
        """Rows of L over active columns, diagonal included."""
        m = self.n_interior
        D = sp.csr_matrix((-self.diag, (np.arange(m), np.arange(m))), shape=self.W.shape)
        return (self.W + D).tocsr()


def discretize(grid: Grid, domain: Domain, A, f=None, g=None, backend: str | None = None) -> DiscreteProblem:
    """Assemble the monotone scheme on ``grid`` for the open set ``domain``.

    ``A`` is a CoefficientField (or callable returning (m, 2, 2) arrays);
    ``f`` and ``g`` are scalars, callables on (m, 3) point arrays, or None.
    """
    kern = get_backend(backend)
    pts = grid.points()
    interior = np.flatnonzero(domain.contains(pts))
    if len(interior) == 0:
        raise InvalidScenario("no grid node lies inside the domain")
    ipts = pts[interior]
    Aint = np.asarray(A(ipts), float)
    if hasattr(A, "check_bounds") and not A.check_bounds(ipts, tol=1e-9):
        raise InvalidScenario(f"coefficient {getattr(A, 'name', 'A')} leaves its ellipticity bounds")
    cols, vals, dg, failed = kern.assemble_stencils(grid.xs, grid.ts, grid.step, grid.unravel(interior), Aint)
    if failed >= 0:
        node = ipts[failed]
        raise GridTooSmall(f"stencil foot of node {tuple(np.round(node, 6))} leaves the grid box", node=node)
    diag = -np.asarray(dg, float)
    self_hit = cols == interior[:, None]
    diag -= np.sum(np.where(self_hit, vals, 0.0), axis=1)
    cols = np.where(self_hit, -1, cols)
    used = cols >= 0
    rows = np.repeat(np.arange(len(interior)), used.sum(axis=1))
    cflat = cols[used]
    cval = vals[used]
    is_int = np.isin(cflat, interior)
    dirichlet = np.unique(cflat[~is_int])
    pos = np.where(is_int, np.searchsorted(interior, cflat),
                   len(interior) + np.searchsorted(dirichlet, cflat))
    shape = (len(interior), len(interior) + len(dirichlet))
    W = sp.coo_matrix((cval, (rows, pos)), shape=shape).tocsr()
    W.sum_duplicates()
    W.sort_indices()
    W.indptr = W.indptr.astype(np.int32)
    W.indices = W.indices.astype(np.int32)
    if np.any(W.data < 0) or np.any(diag <= 0):
        raise AssertionError("scheme lost monotonicity")
    rowsum = np.asarray(W.sum(axis=1)).ravel()
    if np.max(np.abs(rowsum - diag) / diag) > 1e-10:
        raise AssertionError("scheme rows do not annihilate constants")
    fv = _evaluate(f, ipts)
    gv = _evaluate(g, pts[dirichlet])
    if not np.all(np.isfinite(fv)):
        raise InvalidScenario("source term is not finite at an interior node")
    if not np.all(np.isfinite(gv)):
        raise InvalidScenario("boundary data is not finite at a Dirichlet node")
    logger.debug("assembled %d interior, %d dirichlet nodes on %s", len(interior), len(dirichlet),
                 grid.describe())
    return DiscreteProblem(grid, interior, dirichlet, W, diag, fv, gv,
                           "compiled" if kern.__name__.endswith("_kernels") else "python")


@dataclass
class Solution:
    problem: DiscreteProblem
    u: np.ndarray  # interior values
    residual: float
    history: list = field(default_factory=list)
    sweeps: int = 0

    @property
    def grid(self) -> Grid:
        return self.problem.grid

    def full(self) -> np.ndarray:
        """Values on the whole grid, NaN at nodes outside the active set."""
        out = np.full(self.grid.size, np.nan)
        out[self.problem.interior] = self.u
        out[self.problem.dirichlet] = self.problem.g
        return out.reshape(self.grid.shape)

    def interior_points(self) -> np.ndarray:
        return self.grid.points()[self.problem.interior]

    def boundary_values(self) -> np.ndarray:
        return self.problem.g

    def interpolate(self, z) -> np.ndarray:
        """Trilinear interpolation; NaN where a corner is inactive."""
        from scipy.interpolate import RegularGridInterpolator

        g = self.grid
        interp = RegularGridInterpolator((g.xs, g.xs, g.ts), self.full(), bounds_error=False,
                                         fill_value=np.nan)
        return interp(np.atleast_2d(z))


def _precondition(kern, prob, m, n_act):
    W, diag = prob.W, prob.diag

    def apply(r):
        x = np.zeros(n_act)
        neg = -np.ascontiguousarray(r, dtype=float)
        kern.gs_sweep(W.indptr, W.indices, W.data, diag, neg, x, m, False, False)
        kern.gs_sweep(W.indptr, W.indices, W.data, diag, neg, x, m, False, True)
        return x[:m]

    return spla.LinearOperator((m, m), matvec=apply, dtype=float)


def solve(prob: DiscreteProblem, tol: float = RESIDUAL_TOL, method: str = "krylov",
          max_sweeps: int = 20000, krylov_maxiter: int = 2000) -> Solution:
    """Solve the assembled system to relative residual ``tol``.

    ``krylov`` runs GMRES preconditioned by a symmetric Gauss-Seidel sweep
    and then finishes with clamped Gauss-Seidel sweeps; ``gauss-seidel``
    uses the clamped sweeps alone.  With f = 0 the start vector is kept in
    the range of the boundary data, so the discrete maximum principle holds
    exactly for the returned values.
    """
    kern = get_backend(prob.backend)
    m = prob.n_interior
    n_act = m + len(prob.dirichlet)
    M, b = prob.system()
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return Solution(prob, np.zeros(m), 0.0, [0.0], 0)
    history = []

    def rel_res(u):
        return float(np.linalg.norm(b - M @ u)) / bnorm

    u = np.zeros(m)
    if method == "krylov":
        pre = _precondition(kern, prob, m, n_act)
        counter = []
        u, info = spla.gmres(M, b, M=pre, rtol=tol * 0.05, atol=0.0, restart=60,
                             maxiter=krylov_maxiter, callback=counter.append, callback_type="pr_norm")
        history.extend(float(v) for v in counter)
        if info != 0:
            logger.warning("GMRES stopped with info=%d; continuing with Gauss-Seidel", info)
    elif method != "gauss-seidel":
        raise ValueError(f"unknown method {method!r}")
    f_zero = not np.any(prob.f)
    if f_zero and len(prob.g):
        u = np.clip(u, np.min(prob.g), np.max(prob.g))
    x = np.concatenate([u, prob.g]).astype(float)
    negf = np.ascontiguousarray(prob.f, dtype=float)
    res = rel_res(x[:m])
    history.append(res)
    sweeps = 0
    # at least one clamped sweep so that every value is a clamped average
    while sweeps == 0 or res > tol:
        if sweeps >= max_sweeps:
            raise SolverFailure(f"residual {res:.3e} above {tol:.1e} after {sweeps} sweeps", history)
        kern.gs_sweep(prob.W.indptr, prob.W.indices, prob.W.data, prob.diag, negf, x, m, True, False)
        sweeps += 1
        if sweeps % 10 == 1 or sweeps < 10:
            res = rel_res(x[:m])
            history.append(res)
    res = rel_res(x[:m])
    if res > tol:
        raise SolverFailure(f"residual {res:.3e} above {tol:.1e}", history)
    return Solution(prob, x[:m].copy(), res, history, sweeps)


def solve_dirichlet(grid: Grid, domain: Domain, A, f=None, g=None, tol: float = RESIDUAL_TOL,
                    method: str = "krylov", backend: str | None = None) -> Solution:
    """Assemble and solve in one call."""
    return solve(discretize(grid, domain, A, f, g, backend), tol=tol, method=method)


def apply_operator(prob: DiscreteProblem, values) -> np.ndarray:
    """Discrete L applied to a function given on the active nodes.

    ``values`` is a callable on points or an array over ``prob.active``.
    """
    if callable(values):
        values = _evaluate(values, prob.grid.points()[prob.active])
    values = np.asarray(values, float)
    return prob.W @ values - prob.diag * values[: prob.n_interior]


def discrete_comparison_test(u: Solution, v: Solution, tol: float = 0.0) -> bool:
    """True iff u <= v + tol at every interior node.

    Both solutions must live on the same grid and domain.  Callers build
    pairs with f_u >= f_v and g_u <= g_v, under which the scheme promises
    the inequality.
    """
    pu, pv = u.problem, v.problem
    if (pu.grid.shape != pv.grid.shape or not np.array_equal(pu.interior, pv.interior)
            or not np.array_equal(pu.dirichlet, pv.dirichlet)):
        raise ValueError("solutions live on different discretizations")
    return bool(np.all(u.u <= v.u + tol))


def estimate_inftoinf(domain: Domain, R0: float, A, f, hx: float, kappa: float = 2.0,
                      backend: str | None = None) -> tuple[bool, float]:
    """Check sup|u| <= R0^2 sup|f| / (4 n lam) for zero boundary data.

    Returns (bound holds, ratio of the two sides).  ``R0`` is the radius
    of a gauge ball containing the domain.
    """
    from .grid import grid_for_domain

    sol = solve_dirichlet(grid_for_domain(domain, hx, kappa), domain, A, f, 0.0, backend=backend)
    fmax = float(np.max(np.abs(sol.problem.f))) if sol.problem.n_interior else 0.0
    if fmax == 0.0:
        return True, 0.0
    lam = getattr(A, "lam", 1.0)
    ratio = float(np.max(np.abs(sol.u))) / (R0 ** 2 * fmax / (4 * lam))
    return ratio <= 1.0, ratio


def solution_csv(sol: Solution) -> str:
    """Flat snapshot: one line per active node with its class and value."""
    pts = sol.grid.points()
    lines = ["x1,x2,t,class,value"]
    for kind, idx, vals in (("interior", sol.problem.interior, sol.u),
                            ("dirichlet", sol.problem.dirichlet, sol.problem.g)):
        for p, v in zip(pts[idx], vals):
            lines.append(f"{float(p[0])!r},{float(p[1])!r},{float(p[2])!r},{kind},{float(v)!r}")
    return "\n".join(lines) + "\n"
