import numpy as np
import pytest
from hypothesis import given, strategies as st

from heislab.domains import GaugeBall
from heislab.hcalc import coefficient_from_text
from heislab.solver import _kernels_py as P
from heislab.solver.grid import grid_for_domain
from heislab.solver.kernels import COMPILED_AVAILABLE, get_backend
from heislab.solver.scheme import discretize, solve

needs_compiled = pytest.mark.skipif(not COMPILED_AVAILABLE, reason="compiled kernels not built")


@st.composite
def spd(draw):
    lam = draw(st.floats(0.2, 2.0))
    ratio = draw(st.floats(1.0, 3.0))
    ang = draw(st.floats(0, np.pi))
    c, s = np.cos(ang), np.sin(ang)
    R = np.array([[c, -s], [s, c]])
    return R @ np.diag([lam * ratio, lam]) @ R.T


@given(spd())
def test_decomposition_reconstructs(A):
    parts = P.decompose(A[0, 0], A[0, 1], A[1, 1])
    assert all(mu >= 0 for _, _, mu in parts)
    rebuilt = sum(mu * np.outer([d1, d2], [d1, d2]) for d1, d2, mu in parts)
    assert np.allclose(rebuilt, A, atol=1e-12 * np.max(np.abs(A)) + 1e-14)


def test_dominant_matrix_uses_lattice_directions():
    parts = P.decompose(1.3, 0.2, 1.0)
    assert {(d1, d2) for d1, d2, _ in parts} == {(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)}


def test_unknown_backend():
    with pytest.raises(ValueError):
        get_backend("fortran")
    assert get_backend("python") is P


@needs_compiled
@pytest.mark.parametrize("field", ["identity", "diagonal(1 1.3)", "rotating-anisotropy(1 1.3 1)",
                                   "random(1 1.3)"])
def test_backends_assemble_identically(field):
    domain = GaugeBall((0.0, 0.0, 0.0), 1.0)
    grid = grid_for_domain(domain, 0.25, 2.0)
    A = coefficient_from_text(field, 1, seed=3)
    a = discretize(grid, domain, A, f=-1.0, backend="python")
    b = discretize(grid, domain, A, f=-1.0, backend="compiled")
    assert np.array_equal(a.interior, b.interior) and np.array_equal(a.dirichlet, b.dirichlet)
    assert np.allclose(a.W.toarray(), b.W.toarray(), rtol=1e-13, atol=1e-13)
    assert np.allclose(a.diag, b.diag, rtol=1e-13)


@needs_compiled
def test_backends_solve_identically():
    domain = GaugeBall((0.0, 0.0, 0.0), 1.0)
    grid = grid_for_domain(domain, 0.25, 2.0)
    A = coefficient_from_text("rotating-anisotropy(1 1.3 1)")
    ua = solve(discretize(grid, domain, A, f=-1.0, backend="python")).u
    ub = solve(discretize(grid, domain, A, f=-1.0, backend="compiled")).u
    assert np.max(np.abs(ua - ub)) < 1e-8 * np.max(np.abs(ua))


@needs_compiled
@given(st.integers(0, 10_000), st.booleans(), st.booleans())
def test_gauss_seidel_sweeps_agree(seed, clamp, reverse):
    rng = np.random.default_rng(seed)
    m, extra = 12, 4
    dense = rng.uniform(0, 1, (m, m + extra)) * (rng.uniform(size=(m, m + extra)) < 0.4)
    np.fill_diagonal(dense[:, :m], 0.0)
    import scipy.sparse as sp
    W = sp.csr_matrix(dense)
    indptr, indices = W.indptr.astype(np.int32), W.indices.astype(np.int32)
    diag = dense.sum(axis=1) + 0.5
    f = rng.normal(size=m)
    x0 = rng.normal(size=m + extra)
    xa, xb = x0.copy(), x0.copy()
    P.gs_sweep(indptr, indices, W.data, diag, f, xa, m, clamp, reverse)
    get_backend("compiled").gs_sweep(indptr, indices, W.data, diag, f, xb, m, clamp, reverse)
    assert np.allclose(xa, xb, rtol=1e-14, atol=1e-14)
