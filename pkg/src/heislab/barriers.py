"""Barrier constants, subsolution checks and the singular potential U_E.

Everything here is closed form or deterministic quadrature.  The
potential of a set E is integrated in the coordinates centred at the
evaluation point, split into dyadic gauge shells so that every shell is a
dilate of one reference shell; the innermost shells are bounded by the
geometric tail of that reference integral.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from functools import lru_cache

import numpy as np

from . import fields
from .domains import Domain, GaugeBall
from .errors import ConstantsSearchFailure, DomainError, InvalidArgument
from .hcalc import CoefficientField, apply_LA
from .hgroup import (_coerce, ball_samples, ball_volume, cached_float, compose, dilate, dist, gauge,
                     gauge4, homogeneous_dimension, inverse, sphere_around)

TAU_GRID_STEP = 0.5
TAU_SEARCH_MAX = 1e4


def cordes_landis_bound(n: int) -> float:
    """Largest admissible Lambda/lambda (exclusive): (Q+3)/(Q+1)."""
    Q = homogeneous_dimension(n)
    return (Q + 3) / (Q + 1)


def satisfies_cordes_landis(n: int, ratio: float) -> bool:
    return 1.0 <= ratio < cordes_landis_bound(n)


def alpha_min(n: int, ratio: float) -> float:
    Q = homogeneous_dimension(n)
    return ((Q + 1) * ratio - 3) / 4


def alpha_range(n: int, ratio: float):
    """Interval [alpha_min, Q/4) of exponents making psi_alpha a subsolution."""
    if not satisfies_cordes_landis(n, ratio):
        raise InvalidArgument(f"ratio {ratio} violates the Cordes-Landis bound {cordes_landis_bound(n):.6g}")
    return alpha_min(n, ratio), homogeneous_dimension(n) / 4


def landis_quantity(A: np.ndarray) -> float:
    """sup over samples of (tr A + 4 max eig) / min eig; compare with Q + 4."""
    ev = np.linalg.eigvalsh(A)
    return float(np.max((np.sum(ev, axis=-1) + 4 * ev[..., -1]) / ev[..., 0]))


def satisfies_landis(n: int, A: np.ndarray) -> bool:
    return landis_quantity(A) < homogeneous_dimension(n) + 4


# --- psi_alpha identities ----------------------------------------------

def trace_psi_closed(M: np.ndarray, z, alpha: float) -> np.ndarray:
    """tr(M D^2_X psi_alpha) through the unit vectors g, x/|x|, Jx/|x|.

    (4 alpha |x|^2 / phi^(alpha+1)) [4 (alpha+1) <M g, g> - tr M
    - 2 <M xh, xh> - 2 <M Jxh, Jxh>], with g the direction of grad_X phi.
    Points with x = 0 return 0.
    """
    za, n, _ = _coerce(z)
    x, t = za[..., :-1], za[..., -1]
    s = np.sum(x * x, axis=-1)
    ph = s * s + t * t
    if np.any(ph == 0):
        raise DomainError("psi_alpha is singular at the pole")
    M = np.broadcast_to(np.asarray(M, float), za.shape[:-1] + (2 * n, 2 * n))
    from .hgroup import J
    g = s[..., None] * x + t[..., None] * J(x)
    with np.errstate(invalid="ignore", divide="ignore"):
        gh = g / np.linalg.norm(g, axis=-1, keepdims=True)
        xh = x / np.sqrt(s)[..., None]
    jxh = J(xh)

    def quad(v):
        return np.einsum("...i,...ij,...j->...", v, M, v)

    bracket = (4 * (alpha + 1) * quad(gh) - np.trace(M, axis1=-2, axis2=-1)
               - 2 * quad(xh) - 2 * quad(jxh))
    out = 4 * alpha * s / ph ** (alpha + 1) * bracket
    return np.where(s > 0, out, 0.0)


def trace_psi_lower_bound(n: int, lam: float, Lam: float, z, alpha: float) -> np.ndarray:
    """4 lam alpha |x|^2 phi^(-alpha-1) (4 alpha + 3 - (Q+1) Lam/lam)."""
    za, _, _ = _coerce(z, n)
    s = np.sum(za[..., :-1] ** 2, axis=-1)
    ph = s * s + za[..., -1] ** 2
    Q = homogeneous_dimension(n)
    return 4 * lam * alpha * s / ph ** (alpha + 1) * (4 * alpha + 3 - (Q + 1) * Lam / lam)


def worst_case_field(n: int, lam: float, Lam: float) -> CoefficientField:
    """A(z) with eigenvalue lam along grad_X phi and Lam across it."""
    from .hcalc import gradient_aligned_field

    return gradient_aligned_field(n, lam, Lam, fields.phi(n).grad)


@dataclass
class SubsolutionCheck:
    ok: bool
    min_residual: float
    worst_point: np.ndarray
    tolerance: float
    count: int


def verify_subsolution(A, barrier, samples, bound=None, rel_tol: float = 1e-10) -> SubsolutionCheck:
    """Check L_A barrier >= bound at every sample.

    ``bound`` may be None (zero), a scalar or an array over the samples.
    The tolerance is ``rel_tol`` times the size of the largest Hessian
    contribution at each point, so rounding in closed forms never flags.
    """
    pts, _, _ = _coerce(samples)
    pts = np.atleast_2d(pts)
    Az = A(pts) if callable(A) else np.broadcast_to(np.asarray(A, float), pts.shape[:-1] + (pts.shape[-1] - 1,) * 2)
    H = barrier.hess(pts)
    val = np.einsum("...ij,...ij->...", Az, H)
    scale = np.einsum("...ij,...ij->...", np.abs(Az), np.abs(H))
    b = np.zeros(len(pts)) if bound is None else np.broadcast_to(np.asarray(bound, float), val.shape)
    resid = val - b
    tol = rel_tol * np.maximum(scale, np.abs(b))
    bad = resid < -tol
    i = int(np.argmin(resid + tol))
    return SubsolutionCheck(not bool(np.any(bad)), float(np.min(resid)), pts[i], float(tol[i]), len(pts))


# --- singular potential -------------------------------------------------

DEFAULT_SHELL_RESOLUTION = {1: 56, 2: 14}


@lru_cache(maxsize=None)
def _reference_shell(n: int, resolution: int):
    """Midpoint nodes of [-1,1]^(2n+1) inside {1/2 < rho < 1}, with weight."""
    d = 2 * n + 1
    h = 2.0 / resolution
    axis = -1 + (np.arange(resolution) + 0.5) * h
    grid = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    g4 = gauge4(grid)
    keep = (g4 < 1.0) & (g4 > 1.0 / 16)
    pts = grid[keep]
    return pts, gauge(pts), h ** d


def reference_shell_integral(n: int, alpha: float, resolution: int | None = None) -> float:
    """Quadrature of rho^(-4 alpha) over {1/2 < rho < 1}, cached on disk when enabled."""
    res = resolution or DEFAULT_SHELL_RESOLUTION.get(n, 10)

    def compute():
        _, rho, w = _reference_shell(n, res)
        return float(np.sum(rho ** (-4 * alpha)) * w)

    return cached_float(f"shell_n{n}_r{res}_a{float(alpha).hex()}", compute)


@dataclass
class PotentialValue:
    value: float
    tail_bound: float
    shells: int


def potential(z, alpha: float, E: Domain, enclosing: GaugeBall, rel_tol: float = 1e-3,
              resolution: int | None = None, max_shells: int = 80) -> PotentialValue:
    """U_E(z) = integral over E of d(z, zeta)^(-4 alpha) d zeta.

    ``enclosing`` is a gauge ball containing E.  The integral is taken over
    dyadic shells around z, from the outer radius d(z, c) + R down to a
    radius where the remaining ball around z carries less than ``rel_tol``
    of the running total (or misses E entirely).  If that remaining ball
    lies inside E, as happens for E a gauge ball containing z, its exact
    geometric tail is added.
    """
    za, n, _ = _coerce(z)
    Q = homogeneous_dimension(n)
    if not 0 < 4 * alpha < Q:
        raise InvalidArgument("need 0 < 4 alpha < Q")
    res = resolution or DEFAULT_SHELL_RESOLUTION.get(n, 10)
    ref, rho_ref, w = _reference_shell(n, res)
    dens = rho_ref ** (-4 * alpha)
    i_shell = float(np.sum(dens) * w)
    ratio = 2.0 ** (-(Q - 4 * alpha))
    c = np.asarray(enclosing.center, float)
    dzc = float(dist(za, c))
    outer = dzc + enclosing.radius
    total = 0.0
    ball_inside = isinstance(E, GaugeBall) and E == enclosing
    for k in range(max_shells):
        s = outer * 2.0 ** (-k)
        if dzc > enclosing.radius + s:
            return PotentialValue(total, 0.0, k)
        tail = i_shell * s ** (Q - 4 * alpha) / (1 - ratio)
        if ball_inside and dzc + s <= enclosing.radius:
            return PotentialValue(total + tail, 0.0, k)
        if total > 0 and tail < rel_tol * total:
            return PotentialValue(total, tail, k)
        pts = compose(np.broadcast_to(za, ref.shape), dilate(ref, s))
        inside = E.contains(pts)
        total += float(np.sum(dens[inside])) * w * s ** (Q - 4 * alpha)
    raise DomainError("potential quadrature did not resolve the pole")


def sigma_partial(n: int, alpha: float, shells: int, resolution: int | None = None) -> float:
    """(1/|B_1|) * integral of rho^(-4 alpha) over {2^-shells < rho < 1}."""
    i_shell = reference_shell_integral(n, alpha, resolution)
    Q = homogeneous_dimension(n)
    ratio = 2.0 ** (-(Q - 4 * alpha))
    total = i_shell * sum(ratio ** k for k in range(shells))
    return total / ball_volume(n)


def sigma(n: int, alpha: float, rel_tol: float = 1e-3, resolution: int | None = None,
          max_shells: int = 4096) -> float:
    """Mean of rho^(-4 alpha) over B_1.

    Shells are added until the analytic bound on the remaining inner ball
    falls below ``rel_tol`` of the running total.  For 4 alpha >= Q the
    shells never shrink and a DomainError reports the divergence.
    """
    Q = homogeneous_dimension(n)
    if not alpha > 0:
        raise InvalidArgument("alpha must be positive")
    i_shell = reference_shell_integral(n, alpha, resolution)
    ratio = 2.0 ** (-(Q - 4 * alpha))
    total, k = 0.0, 0
    while k < max_shells:
        total += i_shell * ratio ** k
        k += 1
        if ratio < 1:
            tail = i_shell * ratio ** k / (1 - ratio)
            if tail < rel_tol * total:
                return (total + tail) / ball_volume(n)
    raise DomainError(f"sigma diverges for 4 alpha = {4 * alpha:g} >= Q = {Q}")


# --- constants of the measure-to-sup lemma -------------------------------

@dataclass
class LemmaConstants:
    n: int
    lam: float
    Lam: float
    alpha: float
    tau: float
    sigma: float
    C1: float
    C2: float
    C3: float
    eta: float
    mu: float

    def as_dict(self):
        return asdict(self)


def lemma_constants(n: int, lam: float, Lam: float, alpha: float | None = None) -> LemmaConstants:
    """Constants C1, C2, C3, tau, eta, mu for the given ellipticity.

    tau is the smallest point of {4, 4.5, 5, ...} where
    C1 <= 2^(-4 alpha - 1) and C2 > 2^(-4 alpha - 1).
    """
    if not 0 < lam <= Lam:
        raise InvalidArgument("need 0 < lambda <= Lambda")
    lo, hi = alpha_range(n, Lam / lam)
    if alpha is None:
        alpha = lo
    if not lo - 1e-12 <= alpha < hi:
        raise InvalidArgument(f"alpha {alpha} outside [{lo}, {hi})")
    Q = homogeneous_dimension(n)
    sig = sigma(n, alpha)
    target = 2.0 ** (-4 * alpha - 1)
    tau = 4.0
    while tau <= TAU_SEARCH_MAX:
        C1 = (tau - 1) ** (-4 * alpha)
        C2 = sig * (tau + 1) ** (Q - 4 * alpha)
        if C1 <= target and C2 > target:
            break
        tau += TAU_GRID_STEP
    else:
        raise ConstantsSearchFailure(f"no tau <= {TAU_SEARCH_MAX:g} for alpha={alpha}")
    C3 = 2.0 ** (-4 * alpha)
    eta = C3 / (2 * C2)
    mu = (1 - eta / 2) / (1 - eta / 4)
    return LemmaConstants(n, lam, Lam, alpha, tau, sig, C1, C2, C3, eta, mu)


def check_constants(c: LemmaConstants) -> dict:
    """Structural relations the constants must satisfy."""
    Q = homogeneous_dimension(c.n)
    return {
        "C1_le_half_C3": c.C1 <= c.C3 / 2 * (1 + 1e-12),
        "C2_gt_half_C3": c.C2 > c.C3 / 2,
        "eta_in_0_1": 0 < c.eta < 1,
        "mu_in_0_1": 0 < c.mu < 1,
        "sigma_ge_1": c.sigma >= 1.0,
        "tau_ge_4": c.tau >= 4.0,
        "alpha_lt_Q4": c.alpha < Q / 4,
    }


def potential_bounds(c: LemmaConstants, r: float, center=None, count: int = 24, seed: int = 0,
                     E: Domain | None = None, rel_tol: float = 1e-3) -> dict:
    """Worst ratios for the three potential bounds at radius r.

    Returns max over samples of U_E / bound for the two upper bounds and
    min of U_E / bound for the lower bound; E defaults to B_r(center).
    """
    n = c.n
    center = np.zeros(2 * n + 1) if center is None else np.asarray(center, float)
    ball = GaugeBall(tuple(center), r)
    E = ball if E is None else E
    Q = homogeneous_dimension(n)
    vol_E = ball_volume(n) * r ** Q if E is ball else None
    if vol_E is None:
        pts = ball_samples(center, r, 20000, seed)
        vol_E = ball_volume(n) * r ** Q * float(np.mean(E.contains(pts)))
    a4 = 4 * c.alpha

    def U(z):
        return potential(z, c.alpha, E, ball, rel_tol=rel_tol).value

    outer = sphere_around(center, c.tau * r, count, seed)
    inner_big = ball_samples(center, c.tau * r, count, seed + 1)
    inner = ball_samples(center, r, count, seed + 2)
    b1 = c.C1 * r ** (-a4) * vol_E
    b2 = c.C2 * r ** (-a4) * ball_volume(n) * r ** Q
    b3 = c.C3 * r ** (-a4) * vol_E
    return {
        "outer_sphere_max_ratio": max(U(z) / b1 for z in outer),
        "big_ball_max_ratio": max(U(z) / b2 for z in inner_big),
        "small_ball_min_ratio": min(U(z) / b3 for z in inner),
        "volume_E": vol_E,
    }


def growth_barrier_values(c: LemmaConstants, z, r: float, E: Domain, enclosing: GaugeBall,
                          sup_u: float, vol_E: float) -> np.ndarray:
    """w = sup_u [1 - r^(4a) / (C2 |B_r|) (U_E - C1 r^(-4a) |E|)] at the points z."""
    za = np.atleast_2d(np.asarray(z, float))
    n = c.n
    Q = homogeneous_dimension(n)
    a4 = 4 * c.alpha
    Br = ball_volume(n) * r ** Q
    U = np.array([potential(p, c.alpha, E, enclosing).value for p in za])
    return sup_u * (1 - r ** a4 / (c.C2 * Br) * (U - c.C1 * r ** (-a4) * vol_E))


# --- boundary decay ------------------------------------------------------

def gamma_interior_density(eta: float, theta0: float) -> float:
    """Decay factor 1 - eta theta0 under a uniform exterior density."""
    if not 0 < theta0 <= 1:
        raise InvalidArgument("theta0 must be in (0, 1]")
    return 1 - eta * theta0


def gamma_exterior_ball(alpha: float, theta: float) -> float:
    """Decay factor under exterior ball containment with ratio theta."""
    if not 0 < theta <= 1:
        raise InvalidArgument("theta must be in (0, 1]")
    a4 = 4 * alpha
    return 1 - (2 ** -a4 - 3 ** -a4) / (theta ** -a4 - 3 ** -a4)


def admissible_beta(gamma: float, tau: float) -> float:
    """Supremum of admissible Holder exponents, min(log(1/gamma)/log(tau), 1)."""
    if not 0 < gamma < 1:
        raise InvalidArgument("gamma must be in (0, 1)")
    return min(math.log(1 / gamma) / math.log(tau), 1.0)


def holder_constant(n: int, lam: float, beta: float, gamma: float, tau: float, r0: float, R0: float) -> float:
    """Constant of the boundary Holder estimate for exponent beta."""
    if not 0 < beta < admissible_beta(gamma, tau) or beta >= 1:
        raise InvalidArgument("beta must be positive and below the admissible bound")
    base = (1 - gamma * tau ** beta) / (2 * (1 - gamma))
    eps = min(max(base ** (1 / beta), 1e-300), 1 - 1e-15)
    denom = 1 - gamma * tau ** beta - (1 - gamma) * eps ** beta
    return max(tau ** 2 * r0 ** (2 - beta) / denom, R0 ** 2 / r0 ** beta) / (4 * n * lam)


# --- Lipschitz estimate at a point with an exterior touching ball ---------

def lipschitz_M(n: int, lam: float, Lam: float, alpha: float, r0: float, u_plus: float, f_minus_w: float) -> float:
    Q = homogeneous_dimension(n)
    gap = 4 * alpha + 3 - (Q + 1) * Lam / lam
    if gap <= 0:
        raise InvalidArgument("alpha must exceed the subsolution threshold strictly")
    return max(u_plus, (2 ** (4 * alpha) - 1) * r0 ** 2 * f_minus_w / (lam * alpha * gap))


def lipschitz_barrier(n: int, alpha: float, M: float, r0: float, p0):
    """M (r0^(-4a) - psi_alpha(p0^-1 z)) / (r0^(-4a) - (2 r0)^(-4a))."""
    a4 = 4 * alpha
    scale = M / (r0 ** -a4 - (2 * r0) ** -a4)
    return (fields.psi(n, alpha).translate(p0) * -1.0 + r0 ** -a4) * scale


def lipschitz_constant(alpha: float, M: float, r0: float) -> float:
    return alpha * 2 ** (4 * alpha + 3) / (1 - 2 ** (-4 * alpha)) * M / r0


# --- linear growth in t at the characteristic point ----------------------

def linear_growth_alpha(n: int, ratio: float) -> float:
    return ((homogeneous_dimension(n) + 1) * ratio - 2) / 4


def linear_growth_C0(alpha: float) -> float:
    return max(4 * alpha / (1 - 2 ** (-4 * alpha)) * 27 / 64, 2 ** (4 * alpha) / 3)


def linear_growth_M0(n: int, lam: float, Lam: float, r0: float, u_plus: float, f_minus_w: float) -> float:
    """M0 = C0 max(||u+||, r0^4 ||f-||_w / lam)."""
    alpha = linear_growth_alpha(n, Lam / lam)
    return linear_growth_C0(alpha) * max(u_plus, r0 ** 4 * f_minus_w / lam)


def linear_in_t_alpha(n: int, ratio: float) -> float:
    return 25 * n / 8 * ratio


def linear_in_t_C1(n: int, lam: float, Lam: float) -> float:
    Q = homogeneous_dimension(n)
    C0 = linear_growth_C0(linear_growth_alpha(n, Lam / lam))
    a = linear_in_t_alpha(n, Lam / lam)
    k = 11 ** 2 * (11 ** 2 + 10 ** 2) / 10 ** 4
    return max(2 * C0, k * a * C0 / (1 - math.exp(-a / 100)),
               math.exp(61 * a / 50) / ((Q - 2) * Lam / lam))


def linear_in_t_M1(n: int, lam: float, Lam: float, r0: float, u_plus: float, f_minus_w: float) -> float:
    return linear_in_t_C1(n, lam, Lam) * max(u_plus, r0 ** 4 * f_minus_w / lam)


# --- rectangles at the characteristic point ------------------------------

def rectangle_delta(n: int, lam: float, Lam: float) -> float:
    return min(1 / (2 * n + 2), lam / (10 * Lam))


def make_barrier(kind: str, **kw):
    """Construct a catalog barrier by name."""
    kind = kind.lower()
    n = kw.get("n", 1)
    if kind == "psi":
        return fields.psi(n, kw["alpha"])
    if kind == "lipschitz":
        return lipschitz_barrier(n, kw["alpha"], kw["M"], kw["r0"], kw["p0"])
    if kind == "exponential":
        return fields.exponential_barrier(n, kw["M"], kw["x0"], kw["r0"], kw["alpha"])
    if kind == "phi1":
        return fields.phi1(n, kw["r"], kw["delta"])
    if kind == "phi2":
        return fields.phi2(n, kw["r"], kw["delta"])
    if kind == "rectangle":
        return fields.rectangle_barrier(n, kw["r"], kw["delta"], kw["m"], kw["F"], kw["lam"])
    if kind == "linear-growth":
        r = kw["r"]
        alpha = kw["alpha"]
        p0 = np.zeros(2 * n + 1)
        p0[-1] = -r * r
        return lipschitz_barrier(n, alpha, kw["M"], r, p0)
    raise InvalidArgument(f"unknown barrier {kind!r}")
