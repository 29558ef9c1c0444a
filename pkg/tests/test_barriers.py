import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from heislab import barriers as B
from heislab import fields as F
from heislab import hcalc as H
from heislab.domains import GaugeBall
from heislab.errors import DomainError, InvalidArgument
from heislab.hgroup import ball_volume, ball_samples, compose, dilate, dist, sphere_around

rng = np.random.default_rng(5)
PTS = np.column_stack([rng.uniform(-1.5, 1.5, (2000, 2)), rng.uniform(-2, 2, 2000)])


def test_cordes_landis_threshold():
    assert B.cordes_landis_bound(1) == pytest.approx(7 / 5)
    assert B.satisfies_cordes_landis(1, 1.3)
    assert not B.satisfies_cordes_landis(1, 1.5)
    assert all(B.satisfies_cordes_landis(n, 1.0) for n in (1, 2, 3))


def test_alpha_range_values():
    assert B.alpha_range(1, 1.2) == pytest.approx((0.75, 1.0))
    assert B.alpha_range(1, 1.0) == pytest.approx((0.5, 1.0))
    with pytest.raises(InvalidArgument):
        B.alpha_range(1, 7 / 5)


def test_left_endpoint_is_harmonic_exponent():
    lap = H.horizontal_laplacian(F.psi(1, 0.5), PTS)
    assert np.max(np.abs(lap)) < 1e-9


@pytest.mark.parametrize("alpha", [0.5, 0.8, 0.95])
def test_closed_trace_matches_hessian(alpha):
    psi = F.psi(1, alpha)
    for seed in range(4):
        M = H.random_matrix(1, 1.0, 1.3, np.random.default_rng(seed))
        assert np.allclose(B.trace_psi_closed(M, PTS, alpha), H.apply_LA(M, psi, PTS), rtol=1e-9, atol=1e-12)


def test_lower_bound_dominated():
    alpha = B.alpha_min(1, 1.3)
    for seed in range(10):
        M = H.random_matrix(1, 1.0, 1.3, np.random.default_rng(seed))
        val = B.trace_psi_closed(M, PTS, alpha)
        low = B.trace_psi_lower_bound(1, 1.0, 1.3, PTS, alpha)
        assert np.all(val >= low - 1e-10 * np.abs(low))
        assert np.all(low >= -1e-12)


def test_subsolution_at_alpha_min():
    alpha = B.alpha_min(1, 1.3)
    psi = F.psi(1, alpha)
    for seed in range(20):
        A = H.constant_field(H.random_matrix(1, 1.0, 1.3, np.random.default_rng(seed)))
        chk = B.verify_subsolution(A, psi, PTS)
        assert chk.ok and chk.count == len(PTS)
    # the gradient-aligned field is the sharpest one
    worst = B.verify_subsolution(B.worst_case_field(1, 1.0, 1.3), psi, PTS)
    assert worst.ok


def test_negative_control_exact_threshold():
    # in H^1, with A aligned to grad phi, tr(A D^2 psi) = 4 alpha |x|^2 phi^(-alpha-1) (4 (alpha + 1) lam - 3 (lam + Lam)),
    # so at ratio 1.3 the subsolution property breaks exactly below alpha = 0.725
    A = B.worst_case_field(1, 1.0, 1.3)
    assert not B.verify_subsolution(A, F.psi(1, 0.70), PTS).ok
    assert B.verify_subsolution(A, F.psi(1, 0.75), PTS).ok


def test_phi2_bound():
    r, delta = 0.5, 0.2
    for seed in range(5):
        A = H.constant_field(H.random_matrix(1, 1.0, 1.3, np.random.default_rng(seed)))
        s = np.sum(PTS[:, :2] ** 2, axis=1)
        assert B.verify_subsolution(A, F.phi2(1, r, delta), PTS, bound=8 * 1.0 * s).ok


def test_landis_quantity():
    assert B.satisfies_landis(1, np.eye(2))
    assert not B.satisfies_landis(1, np.diag([1.0, 2.0]))


def test_sigma_closed_form():
    # mean of rho^(-4a) over B_1 is Q / (Q - 4a) by the layer-cake formula
    for alpha in (0.5, 0.75, 0.9):
        assert B.sigma(1, alpha) == pytest.approx(4 / (4 - 4 * alpha), rel=1e-2)


def test_sigma_diverges_at_critical_exponent():
    with pytest.raises(DomainError):
        B.sigma(1, 1.0, max_shells=64)
    a = B.sigma_partial(1, 1.0, 8)
    b = B.sigma_partial(1, 1.0, 16)
    assert b / a == pytest.approx(2.0, rel=1e-12)


def test_potential_at_ball_center():
    alpha, r = 0.6, 0.5
    ball = GaugeBall((0.0, 0.0, 0.0), r)
    U = B.potential(np.zeros(3), alpha, ball, ball).value
    # layer cake: int_0^r s^(-4a) d(s^Q vol(B_1))
    exact = ball_volume(1) * 4 * r ** (4 - 4 * alpha) / (4 - 4 * alpha)
    assert U == pytest.approx(exact, rel=1e-2)


def test_potential_dilation():
    alpha, s = 0.6, 2.0
    c = np.array([0.2, 0.0, 0.1])
    z = np.array([0.5, -0.3, 0.4])
    E = GaugeBall(tuple(c), 0.5)
    Es = GaugeBall(tuple(dilate(c, s)), 0.5 * s)
    u1 = B.potential(z, alpha, E, E).value
    u2 = B.potential(dilate(z, s), alpha, Es, Es).value
    assert u2 == pytest.approx(s ** (4 - 4 * alpha) * u1, rel=1e-2)


@pytest.mark.parametrize("ratio", [1.0, 1.1, 1.3])
def test_lemma_constants_relations(ratio):
    c = B.lemma_constants(1, 1.0, ratio)
    assert all(B.check_constants(c).values())
    assert 2 * c.C1 <= c.C3 * (1 + 1e-12) < 2 * c.C2
    assert c.tau >= 4


def test_lemma_constants_frozen_values():
    # structural values for ratio 1, frozen after an independent recomputation
    c = B.lemma_constants(1, 1.0, 1.0)
    assert c.alpha == 0.5
    assert c.sigma == pytest.approx(2.0, rel=1e-2)
    assert c.tau == 4.0
    assert c.C1 == pytest.approx(1 / 9)
    assert c.C3 == pytest.approx(0.25)
    assert c.C2 == pytest.approx(c.sigma * 25)
    assert c.eta == pytest.approx(c.C3 / (2 * c.C2))
    assert c.mu == pytest.approx((1 - c.eta / 2) / (1 - c.eta / 4))


def test_gamma_values():
    assert B.gamma_interior_density(0.5, 1.0) == pytest.approx(0.5)
    assert B.gamma_interior_density(0.5, 1e-9) == pytest.approx(1.0)
    for alpha in (0.5, 0.8):
        a4 = 4 * alpha
        g1 = B.gamma_exterior_ball(alpha, 1.0)
        assert g1 == pytest.approx(1 - (2 ** -a4 - 3 ** -a4) / (1 - 3 ** -a4))
        assert 0 < g1 < 1
        gs = [B.gamma_exterior_ball(alpha, th) for th in (0.2, 0.4, 0.6, 0.8, 1.0)]
        assert all(a > b for a, b in zip(gs, gs[1:]))
    with pytest.raises(InvalidArgument):
        B.gamma_exterior_ball(0.5, 0.0)


def test_admissible_beta_and_holder_constant():
    g = B.gamma_exterior_ball(0.5, 0.5)
    beta = B.admissible_beta(g, 4.0)
    assert beta == pytest.approx(math.log(1 / g) / math.log(4))
    C = B.holder_constant(1, 1.0, beta / 2, g, 4.0, 1.0, 2.0)
    assert C > 0 and math.isfinite(C)
    with pytest.raises(InvalidArgument):
        B.holder_constant(1, 1.0, beta * 1.01, g, 4.0, 1.0, 2.0)


def test_lipschitz_constants():
    assert B.lipschitz_M(1, 1.0, 1.0, 0.51, 1.0, 0.0, 0.0) == 0.0
    assert B.lipschitz_constant(0.51, 0.0, 1.0) == 0.0
    m1 = B.lipschitz_M(1, 1.0, 1.0, 0.51, 1.0, 0.0, 1.0)
    m2 = B.lipschitz_M(1, 1.0, 1.0, 0.51, 2.0, 0.0, 1.0)
    assert m2 == pytest.approx(4 * m1)
    with pytest.raises(InvalidArgument):
        B.lipschitz_M(1, 1.0, 1.3, B.alpha_min(1, 1.3), 1.0, 1.0, 1.0)


def test_lipschitz_barrier_endpoints_and_gradient():
    alpha, M, r0 = 0.51, 2.0, 0.5
    p0 = np.array([0.0, 0.0, -r0 ** 2])
    w = B.lipschitz_barrier(1, alpha, M, r0, p0)
    inner = sphere_around(p0, r0, 200, seed=1)
    outer = sphere_around(p0, 2 * r0, 200, seed=2)
    assert np.allclose(w(inner), 0.0, atol=1e-12)
    assert np.allclose(w(outer), M, rtol=1e-12)
    # sampled sup of |grad_X w| near the touching point stays below the formula constant
    z0 = np.zeros(3)
    pts = ball_samples(z0, r0 / 2, 4000, seed=3)
    pts = pts[dist(p0, pts) > r0 / 2]
    grad = np.linalg.norm(w.grad(pts), axis=1)
    C = B.lipschitz_constant(alpha, M, r0)
    assert grad.max() <= C
    assert grad.max() > 0.05 * C


def test_linear_in_t_constants_positive():
    assert B.linear_growth_C0(0.5) == pytest.approx(max(2 / 0.75 * 27 / 64, 4 / 3))
    assert B.linear_in_t_C1(1, 1.0, 1.3) >= 2 * B.linear_growth_C0(B.linear_growth_alpha(1, 1.3))
    assert B.linear_in_t_M1(1, 1.0, 1.0, 0.25, 0.0, 0.0) == 0.0


def test_rectangle_delta():
    assert B.rectangle_delta(1, 1.0, 1.0) == pytest.approx(0.1)
    assert B.rectangle_delta(1, 1.0, 1.3) == pytest.approx(1 / 13)


@given(st.floats(1.0, 1.39), st.integers(0, 1000))
def test_subsolution_property(ratio, seed):
    alpha = B.alpha_min(1, ratio)
    if alpha <= 0.5:
        alpha = 0.5
    M = H.random_matrix(1, 1.0, ratio, np.random.default_rng(seed))
    val = B.trace_psi_closed(M, PTS[:200], alpha)
    scale = 4 * alpha * np.sum(PTS[:200, :2] ** 2, axis=1) * (np.sum(PTS[:200, :2] ** 2, axis=1) ** 2
                                                                 + PTS[:200, 2] ** 2) ** (-alpha - 1)
    assert np.all(val >= -1e-10 * scale * 10)
