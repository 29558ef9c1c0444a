import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heislab import fields as F
from heislab.domains import Complement, GaugeBall, HalfSpace, Intersection
from heislab.errors import GridTooSmall, InvalidArgument, InvalidScenario
from heislab.hcalc import coefficient_from_text, horizontal_laplacian
from heislab.solver.grid import MAX_GRID_NODES, Grid, graded_axis, grid_for_domain
from heislab.solver.scheme import (apply_operator, discrete_comparison_test, discretize, estimate_inftoinf,
                                   solution_csv, solve, solve_dirichlet)

BALL = GaugeBall((0.0, 0.0, 0.0), 1.0)
UPPER = Intersection((GaugeBall((0.0, 0.0, 0.0), 1.0), HalfSpace()))
FIELDS = ["identity", "diagonal(1 1.3)", "rotating-anisotropy(1 1.3 1)"]


def _t(p):
    return p[:, 2]


@pytest.mark.parametrize("field", FIELDS)
def test_t_is_annihilated(field):
    A = coefficient_from_text(field)
    prob = discretize(grid_for_domain(UPPER, 0.25, 2.0), UPPER, A)
    assert np.max(np.abs(apply_operator(prob, _t))) < 1e-10


def test_constants_are_annihilated():
    prob = discretize(grid_for_domain(BALL, 0.25, 2.0), BALL, coefficient_from_text(FIELDS[2]))
    ones = np.ones(len(prob.active))
    assert np.max(np.abs(prob.operator_rows() @ ones)) < 1e-10 * np.max(prob.diag)
    assert np.all(prob.W.data >= 0) and np.all(prob.diag > 0)


@pytest.mark.parametrize("field", FIELDS)
def test_reproduces_t(field):
    sol = solve_dirichlet(grid_for_domain(BALL, 0.25, 2.0), BALL, coefficient_from_text(field), 0.0, _t)
    assert np.max(np.abs(sol.u - sol.interior_points()[:, 2])) < 1e-7


def test_consistency_order_on_manufactured_solution():
    u = F.manufactured_linear_t(1, 0.75, 0.5)
    D = Intersection((GaugeBall((0.0, 0.0, 0.5), 0.6), HalfSpace()))
    errs = []
    hxs = (1 / 4, 1 / 8, 1 / 16)
    for hx in hxs:
        prob = discretize(grid_for_domain(D, hx, 1.0), D, coefficient_from_text("identity"))
        pts = prob.grid.points()[prob.interior]
        keep = (np.abs(pts[:, 0]) <= 0.25) & (np.abs(pts[:, 1]) <= 0.25) & (pts[:, 2] >= 0.3) & (pts[:, 2] <= 0.7)
        Lu = apply_operator(prob, u)
        errs.append(np.max(np.abs(Lu - horizontal_laplacian(u, pts))[keep]))
    order = np.polyfit(np.log(hxs), np.log(errs), 1)[0]
    assert order >= 1.0


def test_comparison_by_source_sign():
    grid = grid_for_domain(BALL, 0.25, 2.0)
    A = coefficient_from_text(FIELDS[2])
    u = solve_dirichlet(grid, BALL, A, 1.0, 0.0)
    v = solve_dirichlet(grid, BALL, A, 0.0, 0.0)
    assert discrete_comparison_test(u, v)
    w = solve_dirichlet(grid, BALL, A, 1.0, 0.5)
    assert discrete_comparison_test(u, w)
    assert not discrete_comparison_test(w, u)


@settings(max_examples=15)
@given(st.integers(0, 2 ** 31 - 1), st.sampled_from(FIELDS))
def test_maximum_principle_exact(seed, field):
    rng = np.random.default_rng(seed)
    coef = rng.normal(size=4)

    def g(p):
        return coef[0] + coef[1] * np.sin(3 * p[:, 0]) + coef[2] * p[:, 1] * p[:, 2] + coef[3] * p[:, 2] ** 2

    sol = solve_dirichlet(grid_for_domain(BALL, 0.25, 2.0), BALL, coefficient_from_text(field), 0.0, g)
    gv = sol.boundary_values()
    assert np.min(gv) <= np.min(sol.u) and np.max(sol.u) <= np.max(gv)


@settings(max_examples=10)
@given(st.integers(0, 2 ** 31 - 1))
def test_ordered_pairs_compare(seed):
    rng = np.random.default_rng(seed)
    grid = grid_for_domain(BALL, 0.25, 2.0)
    A = coefficient_from_text("random(1 1.3)", seed=seed)
    f2, dg, df, g1 = rng.normal(size=4)
    u = solve_dirichlet(grid, BALL, A, f2 + abs(df), lambda p: g1 + 0.3 * p[:, 0])
    v = solve_dirichlet(grid, BALL, A, f2, lambda p: g1 + abs(dg) + 0.3 * p[:, 0])
    scale = 1 + max(np.max(np.abs(u.u)), np.max(np.abs(v.u)))
    assert discrete_comparison_test(u, v, tol=1e-8 * scale)


def test_inftoinf_bound():
    A = coefficient_from_text("identity")
    ok, ratio = estimate_inftoinf(BALL, 1.0, A, 0.0, 0.25)
    assert ok and ratio == 0.0
    ok, ratio = estimate_inftoinf(BALL, 1.0, A, 1.0, 0.25)
    assert ok and ratio <= 1.05


def test_dilation_covariance():
    # v(z) = r^2 u(delta_{1/r} z) solves the same equation on the dilated ball
    r = 2.0
    A = coefficient_from_text("identity")
    u = solve_dirichlet(grid_for_domain(BALL, 0.25, 2.0), BALL, A, -1.0, 0.0)
    big = GaugeBall((0.0, 0.0, 0.0), r)
    v = solve_dirichlet(grid_for_domain(big, 0.25 * r, 2.0), big, A, -1.0, 0.0)
    assert np.max(np.abs(v.u - r * r * u.u)) < 1e-7 * np.max(np.abs(v.u))


def test_annulus_with_fundamental_solution():
    D = Intersection((GaugeBall((0.0, 0.0, 0.0), 2.0), Complement(GaugeBall((0.0, 0.0, 0.0), 0.5))))
    u = F.fundamental_solution(1)
    sol = solve_dirichlet(grid_for_domain(D, 0.25, 2.0), D, coefficient_from_text("identity"), 0.0, u)
    err = np.max(np.abs(sol.u - u(sol.interior_points())))
    assert err < 0.25 * np.max(np.abs(sol.u))


def test_grid_errors():
    tight = Grid(np.linspace(-0.75, 0.75, 7), np.linspace(-1.2, 1.2, 25), 0.25)
    with pytest.raises(GridTooSmall):
        discretize(tight, BALL, coefficient_from_text("identity"))
    with pytest.raises(InvalidScenario):
        discretize(Grid(np.linspace(2, 3, 5), np.linspace(2, 3, 5), 0.25), BALL, coefficient_from_text("identity"))
    with pytest.raises(InvalidArgument):
        grid_for_domain(HalfSpace(), 0.25)
    with pytest.raises(InvalidArgument):
        Grid(np.array([0.0, 0.1, 0.3]), np.arange(4.0), 0.1)
    assert MAX_GRID_NODES == 97 ** 3


@given(st.floats(0.001, 0.05), st.floats(1.0, 1.5), st.floats(-0.5, 0.5))
def test_graded_axis_properties(fine, growth, focus):
    nodes = graded_axis(-1.0, 1.0, fine, 16 * fine, focus, growth, min(focus + 0.1, 1.0))
    d = np.diff(nodes)
    assert nodes[0] == -1.0 and nodes[-1] == 1.0
    assert np.all(d > 0)
    assert np.any(np.isclose(nodes, focus))
    # an end sliver may merge into its neighbour
    assert np.max(d) <= 1.25 * 16 * fine * (1 + 1e-9)


def test_solution_csv_is_plain():
    sol = solve_dirichlet(grid_for_domain(BALL, 0.5, 2.0), BALL, coefficient_from_text("identity"), -1.0, 0.0)
    text = solution_csv(sol)
    lines = text.splitlines()
    assert lines[0] == "x1,x2,t,class,value"
    assert len(lines) == 1 + sol.problem.n_interior + len(sol.problem.dirichlet)
    assert "np." not in text
    float(lines[1].split(",")[0])


def test_gauss_seidel_matches_krylov():
    prob = discretize(grid_for_domain(BALL, 0.25, 2.0), BALL, coefficient_from_text(FIELDS[2]), -1.0, 0.0)
    a = solve(prob)
    b = solve(prob, method="gauss-seidel")
    assert np.max(np.abs(a.u - b.u)) < 1e-6 * np.max(np.abs(a.u))
