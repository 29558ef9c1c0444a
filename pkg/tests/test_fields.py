import numpy as np
import pytest
from hypothesis import given, strategies as st

from heislab import fields as F
from heislab import hcalc as H
from heislab.errors import InvalidArgument

rng = np.random.default_rng(7)
PTS = np.column_stack([rng.uniform(-1, 1, (50, 2)), rng.uniform(0.01, 1, 50)])


def _check_closed_forms(u, pts, rtol=1e-4):
    fd_grad = np.stack([H.fd_vector_field(u, j, pts, 1e-5) for j in range(2)], axis=-1)
    assert np.allclose(u.grad(pts), fd_grad, rtol=rtol, atol=1e-6)
    assert np.allclose(u.dt(pts), H.fd_dt(u, pts), rtol=rtol, atol=1e-6)
    assert np.allclose(u.hess(pts), H.fd_hessian(u, pts, 1e-3), rtol=1e-3, atol=1e-4)


@pytest.mark.parametrize("make", [
    lambda: F.phi(1),
    lambda: F.x_quartic(1),
    lambda: F.x_quadratic(1, [0.3, -0.2]),
    lambda: F.x_coordinate_square(1, 1),
    lambda: F.psi(1, 0.6),
    lambda: F.counterexample(1, 0.2, 0.5),
    lambda: F.manufactured_linear_t(1, 0.75, 1.0),
    lambda: F.phi1(1, 0.5, 0.3),
    lambda: F.exponential_barrier(1, 2.0, [0.5, 0.0], 0.5, 1.0),
])
def test_closed_forms_match_differences(make):
    _check_closed_forms(make(), PTS)


def test_field_algebra():
    a, b = F.phi(1), F.coordinate_t(1)
    s = a * b - (a + 1.0) + 2.0
    expect = a(PTS) * b(PTS) - a(PTS) + 1.0
    assert np.allclose(s(PTS), expect)
    _check_closed_forms(s, PTS[:10])


def test_counterexample_properties():
    for q, eps in ((0.05, 1.0), (0.3, 0.25)):
        u = F.counterexample(1, q, eps)
        on_axis = np.column_stack([rng.uniform(-1, 1, (20, 2)), np.zeros(20)])
        assert np.all(u(on_axis) == 0)
        assert u.dt(np.zeros(3)) == pytest.approx(eps ** (2 * q))
    with pytest.raises(InvalidArgument):
        F.counterexample(1, 0.6, 1.0)
    with pytest.raises(InvalidArgument):
        F.counterexample(1, 0.2, 0.0)


def test_quartic_laplacian_weight():
    # Euclidean and horizontal Laplacians agree on functions of x: (8n + 8) |x|^2
    g = F.x_quartic(1)
    s = np.sum(PTS[:, :2] ** 2, axis=1)
    assert np.allclose(H.horizontal_laplacian(g, PTS), 16 * s)
    assert np.allclose(H.horizontal_laplacian(F.x_coordinate_square(1), PTS), 2.0)


def test_rectangle_barrier_endpoints():
    r, delta = 0.5, 0.4
    x = rng.uniform(-0.3, 0.3, (10, 2))
    for t in (0.0, delta * r * r):
        z = np.column_stack([x, np.full(10, t)])
        assert np.allclose(F.phi2(1, r, delta)(z), 0.0, atol=1e-15)


def test_exponential_barrier_vanishes_at_anchor():
    w = F.exponential_barrier(1, 3.0, [0.4, -0.1], 0.5, 2.0)
    assert w(np.array([0.4, -0.1, 0.0])) == pytest.approx(0.0, abs=1e-15)


@given(st.floats(0.05, 3.0))
def test_phi_dilation_degree_four(r):
    phi = F.phi(1)
    from heislab.hgroup import dilate
    assert np.allclose(phi(dilate(PTS, r)), r ** 4 * phi(PTS), rtol=1e-12)
