"""Boundary experiments: Holder and Lipschitz decay, linear growth in t and
the second-order expansion at the characteristic point of {t > 0}."""
from __future__ import annotations

import numpy as np

from .. import barriers, fields, hcalc
from ..domains import GaugeBall, HalfSpace, Intersection, Rectangle
from ..errors import InvalidScenario
from ..hgroup import compose, gauge, inverse
from .common import in_ball, run_solve, sup_norm
from .report import INCONCLUSIVE, EstimateReport, RateFit

SLACK = 0.05
ORIGIN = (0.0, 0.0, 0.0)


def _as_callable(f):
    if f is None:
        return lambda p: np.zeros(len(np.atleast_2d(p)))
    if callable(f):
        return f
    return lambda p, c=float(f): np.full(len(np.atleast_2d(p)), c)


def _x_sq(p):
    return np.sum(np.atleast_2d(p)[:, :2] ** 2, axis=1)


def x_sq_source(sign: float = 1.0):
    """sign * |x|^2, the model source of the weighted class."""
    return lambda p: sign * _x_sq(p)


def weighted_norm(f, pts, weight) -> float:
    """sup |f| / weight over ``pts``; infinite when f != 0 where the weight vanishes."""
    pts = np.atleast_2d(pts)
    return hcalc.weighted_sup_norm(_as_callable(f)(pts), weight(pts))


def _axis_probe(top: float, count: int = 64):
    """Points on the t-axis where the |x|^2 weight vanishes."""
    t = np.linspace(top / count, top, count)
    return np.stack([np.zeros(count), np.zeros(count), t], axis=1)


def _abs_sup_in_balls(sol, z0, radii):
    pts = sol.interior_points()
    out = []
    for r in radii:
        m = in_ball(pts, z0, r)
        out.append((float(np.max(np.abs(sol.u[m]))) if np.any(m) else np.nan, int(m.sum())))
    return out


# --- boundary Holder -------------------------------------------------------------

def exp_boundary_holder(domain, z0, A=None, f=1.0, hx: float = 1 / 16, kappa: float = 2.0,
                        radii=(1.0, 0.5, 0.25, 0.125, 0.0625), theta: float = 0.5, r0: float = 1.0,
                        R0: float = 2.0, t_focus=None, t_focus_hi=None, ht_max=None, label: str = "",
                        backend=None) -> EstimateReport:
    """Decay of sup_{B_r(z0) cap Omega} |u| for zero data and a bounded source.

    The exponent fitted over dyadic radii must reach beta_adm - 0.1, where
    beta_adm comes from the exterior-ball decay factor with ratio ``theta``.
    The constant is checked against C_beta at beta = beta_adm / 2.
    """
    A = A or hcalc.identity_field(1)
    c = barriers.lemma_constants(1, A.lam, A.Lam)
    gamma = barriers.gamma_exterior_ball(c.alpha, theta)
    beta_adm = barriers.admissible_beta(gamma, c.tau)
    beta = beta_adm / 2
    C_beta = barriers.holder_constant(1, A.lam, beta, gamma, c.tau, r0, R0)
    rep = EstimateReport("boundary_holder", "boundary-holder",
                         params={"domain": domain.to_text(), "z0": list(z0), "field": A.name, "hx": hx,
                                 "kappa": kappa, "radii": list(radii), "theta": theta, "r0": r0, "R0": R0,
                                 "label": label},
                         constants={"gamma": gamma, "beta_admissible": beta_adm, "beta": beta, "C_beta": C_beta,
                                    "tau": c.tau, "alpha": c.alpha},
                         tolerance={"exponent_margin": 0.1, "constant_factor": 2.0,
                                    "grid_floor_radius": 4 * hx})
    sol = run_solve(domain, A, f, 0.0, hx, kappa, t_focus=t_focus, t_focus_hi=t_focus_hi, ht_max=ht_max,
                    backend=backend)
    fnorm = sup_norm(f, sol.interior_points())
    sups = _abs_sup_in_balls(sol, z0, radii)
    for r, (s, cnt) in zip(radii, sups):
        rep.add("decay", r=r, nodes=cnt, sup_abs_u=s,
                constant_ratio=s / (fnorm * r ** beta) if fnorm else 0.0)
    if fnorm == 0 and np.max(np.abs(sol.u)) == 0:
        rep.notes.append("zero source gives u = 0")
        rep.check("zero_solution", True)
        return rep
    fit = RateFit.fit(radii, [s for s, _ in sups], floor=4 * hx)
    rep.fits["decay"] = fit
    kept = fit.radii
    ratio = max(s / (fnorm * r ** beta) for r, (s, _) in zip(radii, sups) if r in kept)
    rep.constants["max_constant_ratio"] = ratio
    rep.check("fit_usable", fit.usable)
    rep.check("exponent", fit.usable and fit.slope >= beta_adm - 0.1)
    rep.check("constant_within_2x", ratio <= 2 * C_beta)
    return rep


def _upper_half_ball(R: float):
    return Intersection((GaugeBall(ORIGIN, R), HalfSpace()))


# --- boundary Lipschitz ------------------------------------------------------------

def exp_boundary_lipschitz(A=None, f=None, r0: float = 2 / 3, hx: float = 1 / 16, kappa: float = 2.0,
                           radii=(1.0, 0.5, 0.25, 0.125, 0.0625), min_exponent: float = 0.9,
                           backend=None) -> EstimateReport:
    """Lipschitz decay at the characteristic origin of {t > 0} on H_+ cap B_{3 r0}.

    The exterior touching ball is B_{r0}(p0) with p0 = (0, -r0^2); the
    source must be finite in the weight |grad_X rho(p0^-1 z)|^2, otherwise
    the scenario is invalid.  The default source is -|x|^2, so u >= 0.
    """
    A = A or hcalc.identity_field(1)
    f = x_sq_source(-1.0) if f is None else f
    p0 = np.array([0.0, 0.0, -r0 * r0])
    lo, hi = barriers.alpha_range(1, A.ratio)
    alpha = (lo + hi) / 2
    rep = EstimateReport("boundary_lipschitz", "boundary-lipschitz",
                         params={"field": A.name, "r0": r0, "hx": hx, "kappa": kappa, "radii": list(radii),
                                 "p0": p0, "alpha": alpha},
                         tolerance={"min_exponent": min_exponent, "grid_floor_radius": 4 * hx,
                                    "constant_factor": 2.0})

    def weight(p):
        return fields.horizontal_gauge_gradient_sq(compose(inverse(np.broadcast_to(p0, p.shape)), p))

    domain = _upper_half_ball(3 * r0)
    probe = _axis_probe(3 * r0 * 3 * r0)
    fw = weighted_norm(f, probe, weight)
    if not np.isfinite(fw):
        raise InvalidScenario("source has infinite weighted norm at the characteristic point")
    sol = run_solve(domain, A, f, 0.0, hx, kappa, t_focus=0.0, t_focus_hi=1.0, backend=backend)
    pts = sol.interior_points()
    f_minus_w = weighted_norm(lambda p: np.minimum(_as_callable(f)(p), 0.0), pts, weight)
    u_plus = float(max(np.max(sol.u), 0.0))
    M = barriers.lipschitz_M(1, A.lam, A.Lam, alpha, r0, u_plus, f_minus_w)
    C = barriers.lipschitz_constant(alpha, M, r0)
    sups = _abs_sup_in_balls(sol, ORIGIN, radii)
    for r, (s, cnt) in zip(radii, sups):
        rep.add("decay", r=r, nodes=cnt, sup_abs_u=s, ratio_to_r=s / r)
    near = in_ball(pts, ORIGIN, r0)
    d = gauge(pts[near])
    pointwise = float(np.max(np.maximum(sol.u[near], 0.0) / d)) if np.any(near) else 0.0
    fit = RateFit.fit(radii, [s for s, _ in sups], floor=4 * hx)
    rep.fits["decay"] = fit
    rep.constants = {"M": M, "C": C, "u_plus": u_plus, "f_minus_weighted": f_minus_w,
                     "max_u_over_distance": pointwise}
    rep.check("fit_usable", fit.usable)
    rep.check("exponent", fit.usable and fit.slope >= min_exponent)
    rep.check("pointwise_within_2x", pointwise <= 2 * C)
    return rep


# --- linear growth in t --------------------------------------------------------------

def exp_linear_in_t(A=None, f=None, r0: float = 0.25, hxs=(1 / 12, 1 / 16, 1 / 20), kappa: float = 2.0,
                    drift: float = 0.10, backend=None) -> EstimateReport:
    """sup |u| / t over B_{r0} cap H_+ for zero data on B_{4 r0} cap H_+.

    A node enters the quotient only if t is at least one t-step and at
    least the t-reach of its own stencil, so that no foot crosses {t = 0}.
    The constants bound both signs of u, so they use sup |u| and the
    weighted norm of |f|.
    """
    A = A or hcalc.identity_field(1)
    f = x_sq_source(1.0) if f is None else f
    fw = weighted_norm(f, _axis_probe((4 * r0) ** 2), lambda p: _x_sq(p))
    if not np.isfinite(fw):
        raise InvalidScenario("source has infinite |x|^2-weighted norm")
    rep = EstimateReport("linear_in_t", "linear-growth-in-t",
                         params={"field": A.name, "r0": r0, "hxs": list(hxs), "kappa": kappa},
                         tolerance={"constant_factor": 2.0, "drift": drift, "slack": SLACK})
    domain = _upper_half_ball(4 * r0)
    ratios = []
    lemma_ok = True
    for hx in hxs:
        sol = run_solve(domain, A, f, 0.0, hx, kappa, t_focus=0.0, t_focus_hi=(4 * r0) ** 2, growth=1.2,
                        backend=backend)
        pts = sol.interior_points()
        ht = kappa * hx * hx
        reach = 2 * np.sqrt(2.0) * hx * np.hypot(np.abs(pts[:, 0]) + hx, np.abs(pts[:, 1]) + hx)
        u_abs = np.abs(sol.u)
        u_plus = float(np.max(u_abs))
        f_w = weighted_norm(f, pts, lambda p: _x_sq(p))
        M1 = barriers.linear_in_t_M1(1, A.lam, A.Lam, r0, u_plus, f_w)
        M0 = barriers.linear_growth_M0(1, A.lam, A.Lam, r0, u_plus, f_w)
        sel = in_ball(pts, ORIGIN, r0) & (pts[:, 2] >= np.maximum(reach, ht) * (1 - 1e-9))
        ratio = float(np.max(u_abs[sel] / pts[sel, 2])) if np.any(sel) else float("nan")
        ratios.append(ratio)
        sub = in_ball(pts, ORIGIN, 4 * r0 / 3)
        quartic = M0 / r0 ** 4 * (_x_sq(pts[sub]) ** 2 + r0 * r0 * pts[sub, 2])
        lemma_margin = float(np.max(u_abs[sub] - quartic * (1 + SLACK)))
        lemma_ok &= lemma_margin <= 0
        rep.add("resolution", hx=hx, nodes=int(sel.sum()), sup_u_over_t=ratio, M1=M1, bound=M1 / r0 ** 2,
                M0=M0, quartic_bound_margin=lemma_margin)
    change = abs(ratios[-1] - ratios[-2]) / ratios[-1] if len(ratios) > 1 else 0.0
    bound = rep.rows[-1]["bound"]
    rep.constants = {"sup_u_over_t": ratios[-1], "relative_drift": change, "formula_bound": bound}
    rep.check("finite", all(np.isfinite(ratios)))
    rep.check("refinement_stable", change < drift)
    rep.check("within_2x_formula", max(ratios) <= 2 * bound)
    rep.check("quartic_bound_subregion", lemma_ok)
    return rep


# --- second-order expansion --------------------------------------------------------

def _rect_masks(pts, r, delta, ht):
    x2 = _x_sq(pts)
    t = pts[:, 2]
    full = (x2 < r * r) & (t > 0) & (t < delta * r * r) & (t >= ht * (1 - 1e-9))
    upper = full & (t > delta * r * r / 2)
    return full, upper


def _richardson(sol, delta, radii):
    """(4 g(t/4) - g(t)) / 3 for g(t) = u(0, t) / t along t = delta r^2.

    Radii whose t falls below the first active layer are skipped.
    """
    ts = np.array([delta * r * r for r in radii])
    g = sol.interpolate(np.stack([np.zeros_like(ts), np.zeros_like(ts), ts], axis=1)) / ts
    ok = np.isfinite(g)
    radii, g = np.asarray(radii)[ok], g[ok]
    return radii, g, (4 * g[1:] - g[:-1]) / 3


def exp_second_order_expansion(A=None, f=None, g=None, exact_dt: float | None = 1.0, q: float = 0.75,
                               eps: float = 1.0, R: float = 0.5, hxs=(1 / 32, 1 / 64), kappa: float = 0.75,
                               radii=(0.5, 0.25, 0.125, 0.0625, 0.03125), tol: float = 1e-2,
                               min_r2: float = 0.9, name: str = "second_order_expansion",
                               backend=None) -> EstimateReport:
    """d_t u(0,0) by Richardson extrapolation and the decay of osc (u/t) over rectangles.

    By default the data are those of the manufactured solution
    u = t phi(x, t + eps)^q, whose t-derivative at the origin is eps^(2q).
    The domain is the rectangle {0 < t < delta R^2, |x| < R}; the t-grid
    is uniform with step kappa hx^2 across it and graded in the padding.
    """
    A = A or hcalc.identity_field(1)
    delta = barriers.rectangle_delta(1, A.lam, A.Lam)
    if f is None and g is None:
        exact = fields.manufactured_linear_t(1, q, eps)
        f = lambda p: hcalc.apply_LA(A, exact, np.atleast_2d(p))  # noqa: E731
        g = exact
        exact_dt = eps ** (2 * q)
    domain = Rectangle(R, delta)
    fw = weighted_norm(f, _axis_probe(delta * R * R), lambda p: _x_sq(p))
    if not np.isfinite(fw):
        raise InvalidScenario("source has infinite |x|^2-weighted norm")
    rep = EstimateReport(name, "second-order-expansion",
                         params={"field": A.name, "R": R, "delta": delta, "hxs": list(hxs), "kappa": kappa,
                                 "radii": list(radii), "q": q, "eps": eps},
                         constants={"delta": delta, "exact_dt": exact_dt},
                         tolerance={"dt_abs": tol, "min_r2": min_r2, "slack": SLACK})
    estimates = []
    sol = None
    for hx in hxs:
        sol = run_solve(domain, A, f, g, hx, kappa, t_focus=0.0, t_focus_hi=delta * R * R, growth=1.3,
                        backend=backend)
        used, gvals, rich = _richardson(sol, delta, [r for r in radii if r < R])
        if len(rich) == 0:
            raise InvalidScenario(f"no resolved pair of t-levels at hx={hx:g}")
        estimates.append(float(rich[-1]))
        rep.add("dt_estimate", hx=hx, finest_radius=float(used[-1]), quotient=float(gvals[-1]),
                extrapolated=float(rich[-1]))
    hx = hxs[-1]
    ht = kappa * hx * hx
    pts = sol.interior_points()
    v = sol.u / pts[:, 2]
    fpos = np.maximum(_as_callable(f)(pts), 0.0)
    oscs = []
    first_ok = True
    for r in radii:
        full, upper = _rect_masks(pts, r, delta, ht)
        osc = float(np.ptp(v[full])) if np.any(full) else np.nan
        oscs.append(osc)
        row = {"r": r, "nodes": int(full.sum()), "osc_u_over_t": osc}
        half, _ = _rect_masks(pts, r / 2, delta, ht)
        if np.any(upper) and np.any(half):
            if np.min(sol.u) < 0:
                raise InvalidScenario("solution is negative; the one-sided estimate needs w >= 0")
            fw_r = hcalc.weighted_sup_norm(fpos[full], _x_sq(pts[full]))
            lhs = float(np.min(v[upper]))
            rhs = 2 / delta * float(np.min(v[half])) + r * r / A.lam * fw_r
            ok = lhs <= rhs * (1 + SLACK)
            first_ok &= ok
            row.update(inf_upper=lhs, rhs=rhs, first_estimate_holds=ok)
        rep.add("rectangle", **row)
    fit = RateFit.fit(radii, oscs, floor=4 * hx)
    rep.fits["osc_u_over_t"] = fit
    est = estimates[-1]
    cauchy = abs(estimates[-1] - estimates[-2])
    rep.constants.update({"dt_estimate": est, "cauchy_gap": cauchy,
                          "alpha_fit": fit.slope, "fit_r2": fit.r2})
    if exact_dt is not None:
        rep.check("dt_matches_exact", abs(est - exact_dt) <= tol)
    rep.check("alpha_fit_positive", fit.usable and fit.slope > 0)
    rep.check("fit_quality", fit.usable and fit.r2 >= min_r2)
    rep.check("first_estimate_all_scales", first_ok)
    if cauchy > tol:
        rep.forced_status = INCONCLUSIVE
        rep.notes.append(f"u(0,t)/t limit not Cauchy under refinement (gap {cauchy:.3g})")
    return rep


def exp_dirichlet_data(g_field, A=None, **kw) -> EstimateReport:
    """Expansion for Dirichlet data g on {t = 0}: run on w = u - g, which has source -L_A g."""
    A = A or hcalc.identity_field(1)

    def source(p):
        return -hcalc.apply_LA(A, g_field, np.atleast_2d(p))

    rep = exp_second_order_expansion(A, f=source, g=0.0, exact_dt=None, name="dirichlet_data", **kw)
    rep.params["data"] = g_field.name
    return rep
