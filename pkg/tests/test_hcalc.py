import numpy as np
import pytest
from hypothesis import given, strategies as st

from heislab import fields as F
from heislab import hcalc as H
from heislab.errors import DomainError, InvalidArgument
from heislab.hgroup import J

rng = np.random.default_rng(11)
PTS = np.column_stack([rng.uniform(-1.5, 1.5, (100, 2)), rng.uniform(-2, 2, 100)])


def _phi_grad_by_hand(z):
    x1, x2, t = z[..., 0], z[..., 1], z[..., 2]
    s = x1 ** 2 + x2 ** 2
    # J(x1, x2) = (-x2, x1)
    return np.stack([4 * x1 * s - 4 * t * x2, 4 * x2 * s + 4 * t * x1], axis=-1)


def test_vector_field_on_t():
    t = F.coordinate_t(1)
    z = np.array([0.7, -0.4, 1.1])
    assert H.apply_vector_field(0, t, z) == pytest.approx(2 * 0.4)
    assert H.fd_vector_field(t, 0, z) == pytest.approx(2 * 0.4, rel=1e-9)


def test_phi_gradient_closed_and_fd():
    phi = F.phi(1)
    assert np.allclose(phi.grad(PTS), _phi_grad_by_hand(PTS), rtol=1e-13)
    fd = np.stack([H.fd_vector_field(phi, j, PTS, 1e-4) for j in range(2)], axis=-1)
    assert np.allclose(fd, _phi_grad_by_hand(PTS), rtol=1e-6, atol=1e-6)


def test_phi_fd_error_is_second_order():
    phi = F.phi(1)
    exact = phi.grad(PTS)[..., 0]
    errs = [np.max(np.abs(H.fd_vector_field(phi, 0, PTS, h) - exact)) for h in (1e-2, 5e-3, 2.5e-3)]
    slopes = np.diff(np.log(errs)) / np.diff(np.log([1e-2, 5e-3, 2.5e-3]))
    assert np.all(slopes > 1.7)


def test_gradient_norm_identity():
    # |grad_X phi|^2 = 16 |x|^2 phi
    phi = F.phi(1)
    s = np.sum(PTS[:, :2] ** 2, axis=1)
    lhs = np.sum(phi.grad(PTS) ** 2, axis=1)
    assert np.allclose(lhs, 16 * s * phi(PTS), rtol=1e-12)


def test_hessian_of_t_vanishes():
    assert np.allclose(H.horizontal_hessian(F.coordinate_t(1), PTS), 0.0)


def test_quartic_trace_formula():
    q = F.x_quartic(1)
    for seed in range(5):
        A = H.random_matrix(1, 1.0, 1.3, np.random.default_rng(seed))
        x = PTS[:, :2]
        s = np.sum(x ** 2, axis=1)
        expect = 4 * s * np.trace(A) + 8 * np.einsum("pi,ij,pj->p", x, A, x)
        assert np.allclose(H.apply_LA(A, q, PTS), expect, rtol=1e-12)


def test_psi_laplacian_closed_form():
    for alpha in (0.3, 0.5, 0.9):
        psi = F.psi(1, alpha)
        s = np.sum(PTS[:, :2] ** 2, axis=1)
        phi = s ** 2 + PTS[:, 2] ** 2
        expect = 4 * alpha * (4 * alpha - 2) * s * phi ** (-alpha - 1)
        assert np.allclose(H.horizontal_laplacian(psi, PTS), expect, rtol=1e-10)


def test_fundamental_solution_harmonic():
    u = F.fundamental_solution(1)
    lap = H.horizontal_laplacian(u, PTS)
    scale = np.max(np.abs(u.hess(PTS)), axis=(1, 2))
    assert np.max(np.abs(lap) / scale) < 1e-10
    with pytest.raises(DomainError):
        u(np.zeros(3))


def test_counterexample_laplacian_matches_formula():
    for q, eps in ((0.05, 0.5), (0.3, 1.0), (0.45, 0.1)):
        u = F.counterexample(1, q, eps)
        assert np.allclose(H.horizontal_laplacian(u, PTS), F.counterexample_laplacian(1, q, eps, PTS),
                           rtol=1e-10, atol=1e-12)


def test_fd_hessian_matches_closed_form():
    u = F.counterexample(1, 0.3, 0.5)
    fd = H.fd_hessian(u, PTS[:20], 1e-3)
    assert np.allclose(fd, u.hess(PTS[:20]), rtol=1e-4, atol=1e-4)


def test_commutator_defect():
    z = PTS[:10]
    assert np.allclose(H.commutator_defect(0, 1, F.coordinate_t(1), z), 0, atol=1e-6)
    x1 = F.x_coordinate_square(1, 0)
    assert np.allclose(H.fd_commutator(x1, 0, 1, z), 0, atol=1e-6)
    # phi is a polynomial of low degree, so the nested difference is exact up to rounding
    assert np.max(np.abs(H.commutator_defect(0, 1, F.phi(1), z))) < 1e-8
    u = F.counterexample(1, 0.3, 0.5)
    errs = [np.max(np.abs(H.commutator_defect(0, 1, u, z, h))) for h in (2e-2, 1e-2)]
    assert errs[1] < errs[0] / 3


def test_coordinate_matrix_kernel_on_axis():
    A = np.array([[1.2, 0.1], [0.1, 1.0]])
    M = H.coordinate_matrix(A, np.zeros(2))
    assert np.allclose(M[:2, :2], A) and np.allclose(M[2], 0) and np.allclose(M[:, 2], 0)


@given(st.tuples(*[st.floats(-2, 2) for _ in range(2)]), st.tuples(*[st.floats(-2, 2) for _ in range(3)]),
       st.integers(0, 1000))
def test_coordinate_matrix_quadratic_form(x, zeta, seed):
    x, zeta = np.array(x), np.array(zeta)
    A = H.random_matrix(1, 1.0, 1.3, np.random.default_rng(seed))
    M = H.coordinate_matrix(A, x)
    v = zeta[:2] + 2 * zeta[2] * J(x)
    lhs = zeta @ M @ zeta
    rhs = v @ A @ v
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)
    if np.linalg.norm(x) > 1e-3:
        assert np.linalg.matrix_rank(M, tol=1e-9 * np.max(np.abs(M))) == 2


def test_weighted_norm():
    s = np.sum(PTS[:, :2] ** 2, axis=1)
    assert H.weighted_sup_norm(s, s) == pytest.approx(1.0)
    with_zero = np.concatenate([s, [0.0]])
    assert H.weighted_sup_norm(np.ones_like(with_zero), with_zero) == np.inf
    assert H.weighted_sup_norm(np.zeros(3), np.zeros(3)) == 0.0


def test_coefficient_generators():
    pts = PTS
    for text in ("identity", "diagonal(1 1.3)", "rotating-anisotropy(1 1.3 1)", "rotating(1 1.3)",
                 "random(1 1.3)", "diag(1 1.2)"):
        A = H.coefficient_from_text(text, 1, seed=5)
        assert A.check_bounds(pts), text
    A = H.coefficient_from_text("diagonal(1 1.3)")
    assert np.allclose(A(pts[0]), np.diag([1.0, 1.3]))
    for bad in ("diagonal(2 1)", "diag(1)", "nonsense", "random(1)"):
        with pytest.raises(InvalidArgument):
            H.coefficient_from_text(bad)
    with pytest.raises(InvalidArgument):
        H.CoefficientField(1, 2.0, 1.0, lambda z: z)


@given(st.integers(0, 10_000), st.floats(1.0, 1.4))
def test_random_matrix_spectrum(seed, ratio):
    M = H.random_matrix(1, 1.0, ratio, np.random.default_rng(seed))
    ev = np.linalg.eigvalsh(M)
    assert np.allclose(M, M.T)
    assert ev[0] == pytest.approx(1.0) and ev[-1] == pytest.approx(ratio)
