"""Catalog of closed-form fields used as barriers and manufactured solutions."""
from __future__ import annotations

import numpy as np

from .errors import DomainError, InvalidArgument
from .hcalc import ScalarField
from .hgroup import J, homogeneous_dimension


def _sq(z):
    return np.sum(z[..., :-1] ** 2, axis=-1)


def constant(n: int, c: float) -> ScalarField:
    m = 2 * n
    return ScalarField(
        n,
        lambda z: np.full(z.shape[:-1], float(c)),
        lambda z: np.zeros(z.shape[:-1] + (m,)),
        lambda z: np.zeros(z.shape[:-1] + (m, m)),
        lambda z: np.zeros(z.shape[:-1]),
        f"{c:g}",
    )


def coordinate_t(n: int) -> ScalarField:
    """u = t: X_j t = 2 (J x)_j and the symmetrized Hessian vanishes."""
    m = 2 * n
    return ScalarField(
        n,
        lambda z: z[..., -1].copy(),
        lambda z: 2.0 * J(z[..., :-1]),
        lambda z: np.zeros(z.shape[:-1] + (m, m)),
        lambda z: np.ones(z.shape[:-1]),
        "t",
    )


def x_quadratic(n: int, center=None) -> ScalarField:
    """|x - c|^2 for a fixed horizontal vector c."""
    m = 2 * n
    c = np.zeros(m) if center is None else np.asarray(center, float)
    eye = np.eye(m)
    return ScalarField(
        n,
        lambda z: np.sum((z[..., :-1] - c) ** 2, axis=-1),
        lambda z: 2.0 * (z[..., :-1] - c),
        lambda z: np.broadcast_to(2.0 * eye, z.shape[:-1] + (m, m)).copy(),
        lambda z: np.zeros(z.shape[:-1]),
        "|x-c|^2",
    )


def x_coordinate_square(n: int, j: int = 0) -> ScalarField:
    """x_j^2; its horizontal Laplacian is the constant 2."""
    m = 2 * n
    e = np.zeros((m, m))
    e[j, j] = 2.0

    def grad(z):
        out = np.zeros(z.shape[:-1] + (m,))
        out[..., j] = 2.0 * z[..., j]
        return out

    return ScalarField(
        n,
        lambda z: z[..., j] ** 2,
        grad,
        lambda z: np.broadcast_to(e, z.shape[:-1] + (m, m)).copy(),
        lambda z: np.zeros(z.shape[:-1]),
        f"x{j + 1}^2",
    )


def x_quartic(n: int) -> ScalarField:
    """|x|^4."""
    m = 2 * n
    eye = np.eye(m)

    def hess(z):
        x = z[..., :-1]
        s = _sq(z)[..., None, None]
        return 4 * s * eye + 8 * x[..., :, None] * x[..., None, :]

    return ScalarField(
        n,
        lambda z: _sq(z) ** 2,
        lambda z: 4 * _sq(z)[..., None] * z[..., :-1],
        hess,
        lambda z: np.zeros(z.shape[:-1]),
        "|x|^4",
    )


def phi(n: int) -> ScalarField:
    """Fourth power of the gauge, |x|^4 + t^2."""
    m = 2 * n
    eye = np.eye(m)

    def grad(z):
        x, t = z[..., :-1], z[..., -1:]
        return 4 * _sq(z)[..., None] * x + 4 * t * J(x)

    def hess(z):
        x = z[..., :-1]
        jx = J(x)
        s = _sq(z)[..., None, None]
        return (4 * s * eye + 8 * x[..., :, None] * x[..., None, :]
                + 8 * jx[..., :, None] * jx[..., None, :])

    return ScalarField(n, lambda z: _sq(z) ** 2 + z[..., -1] ** 2, grad, hess,
                       lambda z: 2 * z[..., -1], "phi")


def _guard_pole(field: ScalarField) -> ScalarField:
    def check(fn):
        def wrapped(z):
            if np.any(_sq(z) ** 2 + z[..., -1] ** 2 == 0):
                raise DomainError(f"{field.name} is singular at the pole")
            return fn(z)
        return wrapped

    return ScalarField(field.n, check(field._value), check(field._grad), check(field._hess),
                       check(field._dt), field.name)


def psi(n: int, alpha: float) -> ScalarField:
    """phi^(-alpha) = rho^(-4 alpha); singular at the origin."""
    if not alpha > 0:
        raise InvalidArgument("alpha must be positive")
    f = phi(n).power(-alpha)
    f.name = f"psi[{alpha:g}]"
    return _guard_pole(f)


def fundamental_solution(n: int) -> ScalarField:
    """rho^(2 - Q), annihilated by the horizontal Laplacian away from 0."""
    Q = homogeneous_dimension(n)
    f = phi(n).power((2 - Q) / 4)
    f.name = "rho^(2-Q)"
    return _guard_pole(f)


def shifted_phi(n: int, eps: float) -> ScalarField:
    """phi(x, t + eps), i.e. phi translated by (0, -eps)."""
    p = np.zeros(2 * n + 1)
    p[-1] = -eps
    return phi(n).translate(p)


def counterexample(n: int, q: float, eps: float) -> ScalarField:
    """u = t * phi(x, t + eps)^q."""
    if not 0 < q < 0.5:
        raise InvalidArgument("need 0 < q < 1/2")
    if not eps > 0:
        raise InvalidArgument("need eps > 0")
    f = coordinate_t(n) * shifted_phi(n, eps).power(q)
    f.name = f"u[q={q:g},eps={eps:g}]"
    return f


def manufactured_linear_t(n: int, q: float, eps: float) -> ScalarField:
    """Same closed form as :func:`counterexample` without the q < 1/2 check."""
    if not eps > 0:
        raise InvalidArgument("need eps > 0")
    f = coordinate_t(n) * shifted_phi(n, eps).power(q)
    f.name = f"u[q={q:g},eps={eps:g}]"
    return f


def counterexample_laplacian(n: int, q: float, eps: float, z) -> np.ndarray:
    """Horizontal Laplacian of the counterexample, written out directly:
    8 q phi_eps^(q-1) |x|^2 [t (2q + n) + 2 (t + eps)].
    """
    z = np.asarray(z, float)
    s = _sq(z)
    t = z[..., -1]
    pe = s * s + (t + eps) ** 2
    return 8 * q * pe ** (q - 1) * s * (t * (2 * q + n) + 2 * (t + eps))


def phi2(n: int, r: float, delta: float) -> ScalarField:
    """t (t - delta r^2)."""
    t = coordinate_t(n)
    f = t * (t + (-delta * r * r))
    f.name = "phi2"
    return f


def phi1(n: int, r: float, delta: float) -> ScalarField:
    """t (delta + t / r^2 - 2 delta |x|^4 / r^4)."""
    t = coordinate_t(n)
    inner = t * (1.0 / r ** 2) + x_quartic(n) * (-2 * delta / r ** 4) + delta
    f = t * inner
    f.name = "phi1"
    return f


def rectangle_barrier(n: int, r: float, delta: float, m: float, F: float, lam: float) -> ScalarField:
    """m phi1 + F / (8 lam) phi2."""
    f = phi1(n, r, delta) * m + phi2(n, r, delta) * (F / (8 * lam))
    f.name = "rectangle-barrier"
    return f


def exponential_barrier(n: int, M: float, x0, r0: float, alpha: float) -> ScalarField:
    """M |x0|^2 / r0^2 (1 - exp(-alpha (t + |x - x0|^2) / |x0|^2))."""
    x0 = np.asarray(x0, float)
    s0 = float(np.sum(x0 ** 2))
    if s0 == 0:
        raise InvalidArgument("x0 must be nonzero")
    base = (coordinate_t(n) + x_quadratic(n, x0)) * (-alpha / s0)
    f = (base.exp() * -1.0 + 1.0) * (M * s0 / r0 ** 2)
    f.name = "exponential-barrier"
    return f


def horizontal_gauge_gradient_sq(z) -> np.ndarray:
    """|grad_X rho|^2 = |x|^2 / rho^2, the weight of the Lipschitz estimate."""
    z = np.asarray(z, float)
    s = _sq(z)
    rho2 = np.sqrt(s * s + z[..., -1] ** 2)
    if np.any(rho2 == 0):
        raise DomainError("gauge gradient undefined at the pole")
    return s / rho2
