"""Horizontal calculus on H^n.

``ScalarField`` carries closed-form horizontal gradient, symmetrized
horizontal Hessian and t-derivative, and is closed under sums, products,
left translation and composition with scalar functions.  Finite-difference
versions built from the group law serve as independent checks.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidArgument
from .hgroup import J, _coerce, compose, dim_from_size, inverse, symplectic_matrix

Array = np.ndarray


class ScalarField:
    """A function on H^n with closed-form horizontal derivatives.

    Parameters
    ----------
    n : int
        Dimension parameter of H^n.
    value, grad, hess, dt : callable
        Maps from points of shape (..., 2n+1) to arrays of shape (...),
        (..., 2n), (..., 2n, 2n) and (...).  ``grad`` holds X_j u, ``hess``
        holds (X_i X_j u + X_j X_i u) / 2 and ``dt`` holds the t-derivative.
    """

    def __init__(self, n, value, grad, hess, dt, name="field"):
        self.n = n
        self._value, self._grad, self._hess, self._dt = value, grad, hess, dt
        self.name = name

    def _pts(self, z):
        za, _, _ = _coerce(z, self.n)
        return za

    def __call__(self, z) -> Array:
        return self._value(self._pts(z))

    def grad(self, z) -> Array:
        return self._grad(self._pts(z))

    def hess(self, z) -> Array:
        return self._hess(self._pts(z))

    def dt(self, z) -> Array:
        return self._dt(self._pts(z))

    def __repr__(self):
        return f"ScalarField({self.name}, n={self.n})"

    # algebra
    def __add__(self, other):
        if np.isscalar(other):
            c = float(other)
            return ScalarField(self.n, lambda z: self._value(z) + c, self._grad,
                               self._hess, self._dt, f"({self.name}+{c:g})")
        _same_n(self, other)
        return ScalarField(
            self.n,
            lambda z: self._value(z) + other._value(z),
            lambda z: self._grad(z) + other._grad(z),
            lambda z: self._hess(z) + other._hess(z),
            lambda z: self._dt(z) + other._dt(z),
            f"({self.name}+{other.name})",
        )

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            c = float(other)
            return ScalarField(
                self.n,
                lambda z: c * self._value(z),
                lambda z: c * self._grad(z),
                lambda z: c * self._hess(z),
                lambda z: c * self._dt(z),
                f"{c:g}*{self.name}",
            )
        _same_n(self, other)

        def hess(z):
            u, v = self._value(z)[..., None, None], other._value(z)[..., None, None]
            gu, gv = self._grad(z), other._grad(z)
            cross = gu[..., :, None] * gv[..., None, :]
            return u * other._hess(z) + v * self._hess(z) + cross + np.swapaxes(cross, -1, -2)

        return ScalarField(
            self.n,
            lambda z: self._value(z) * other._value(z),
            lambda z: self._value(z)[..., None] * other._grad(z)
            + other._value(z)[..., None] * self._grad(z),
            hess,
            lambda z: self._value(z) * other._dt(z) + other._value(z) * self._dt(z),
            f"{self.name}*{other.name}",
        )

    __rmul__ = __mul__

    def apply(self, f: Callable, df: Callable, d2f: Callable, name: str = "f"):
        """Compose with a scalar function f given with f' and f''."""

        def value(z):
            return f(self._value(z))

        def grad(z):
            return df(self._value(z))[..., None] * self._grad(z)

        def hess(z):
            u = self._value(z)
            g = self._grad(z)
            return (d2f(u)[..., None, None] * g[..., :, None] * g[..., None, :]
                    + df(u)[..., None, None] * self._hess(z))

        def dt(z):
            return df(self._value(z)) * self._dt(z)

        return ScalarField(self.n, value, grad, hess, dt, f"{name}({self.name})")

    def power(self, a: float):
        a = float(a)
        return self.apply(lambda u: u ** a, lambda u: a * u ** (a - 1),
                          lambda u: a * (a - 1) * u ** (a - 2), f"pow{a:g}")

    def exp(self):
        return self.apply(np.exp, np.exp, np.exp, "exp")

    def translate(self, p):
        """The field z -> u(p^-1 o z).  Left-invariant derivatives commute."""
        pa, _, _ = _coerce(p, self.n)
        pinv = inverse(pa)

        def move(z):
            return compose(np.broadcast_to(pinv, z.shape), z)

        return ScalarField(
            self.n,
            lambda z: self._value(move(z)),
            lambda z: self._grad(move(z)),
            lambda z: self._hess(move(z)),
            lambda z: self._dt(move(z)),
            f"{self.name}@{tuple(np.round(pa, 6))}",
        )


def _same_n(u, v):
    if not isinstance(v, ScalarField):
        raise InvalidArgument(f"cannot combine a field with {type(v).__name__}")
    if u.n != v.n:
        raise InvalidArgument(f"fields live on H^{u.n} and H^{v.n}")


# --- operators ---------------------------------------------------------

def coordinate_matrix(A: Array, x: Array) -> Array:
    """Euclidean (2n+1)x(2n+1) matrix of L_A at horizontal position x.

    Blocks: [[A, 2 A J x], [2 (A J x)^T, 4 <A J x, J x>]].
    """
    A = np.asarray(A, dtype=float)
    x = np.asarray(x, dtype=float)
    jx = J(x)
    ajx = np.einsum("...ij,...j->...i", A, jx)
    m = A.shape[-1]
    out = np.zeros(A.shape[:-2] + (m + 1, m + 1))
    out[..., :m, :m] = A
    out[..., :m, m] = 2 * ajx
    out[..., m, :m] = 2 * ajx
    out[..., m, m] = 4 * np.sum(ajx * jx, axis=-1)
    return out


def apply_LA(A, u: ScalarField, z) -> Array:
    """tr(A(z) D^2_X u(z)) for a coefficient field or a constant matrix."""
    za, _, _ = _coerce(z, u.n)
    Az = A(za) if callable(A) else np.broadcast_to(np.asarray(A, float), za.shape[:-1] + (2 * u.n, 2 * u.n))
    return np.einsum("...ij,...ij->...", Az, u.hess(za))


def horizontal_laplacian(u: ScalarField, z) -> Array:
    return np.trace(u.hess(z), axis1=-2, axis2=-1)


def weighted_sup_norm(f: Array, weight: Array) -> float:
    """sup |f| / weight over samples where the weight is positive.

    A sample with f != 0 where the weight vanishes makes the norm infinite.
    """
    f = np.asarray(f, float)
    weight = np.asarray(weight, float)
    pos = weight > 0
    if np.any(~pos & (f != 0)):
        return float("inf")
    if not np.any(pos):
        return 0.0
    return float(np.max(np.abs(f[pos]) / weight[pos]))


# --- finite-difference oracles ----------------------------------------

def _shift(z: Array, v: Array) -> Array:
    """Right translation z o (v, 0): the flow of sum v_j X_j."""
    w = np.zeros(z.shape)
    w[..., :-1] = v
    return compose(z, w)


def fd_vector_field(u: Callable, j: int, z, h: float = 1e-5) -> Array:
    """Central difference of X_j u along its integral curve."""
    za, n, _ = _coerce(z)
    e = np.zeros(2 * n)
    e[j] = h
    return (u(_shift(za, e)) - u(_shift(za, -e))) / (2 * h)


def default_step(z) -> np.ndarray:
    """h = 1e-3 * max(1, rho(z)), one value per point."""
    from .hgroup import gauge

    return 1e-3 * np.maximum(1.0, np.asarray(gauge(z)))


def fd_hessian(u: Callable, z, h: float = 1e-3) -> Array:
    """Symmetrized horizontal Hessian (X_i X_j + X_j X_i) / 2 by nested differencing."""
    za, n, _ = _coerce(z)
    m = 2 * n
    out = np.zeros(za.shape[:-1] + (m, m))

    def xj(j):
        return lambda w: fd_vector_field(u, j, w, h)

    for i in range(m):
        for j in range(i, m):
            xixj = fd_vector_field(xj(j), i, za, h)
            xjxi = fd_vector_field(xj(i), j, za, h) if j != i else xixj
            out[..., i, j] = out[..., j, i] = 0.5 * (xixj + xjxi)
    return out


def fd_dt(u: Callable, z, h: float = 1e-5) -> Array:
    za, _, _ = _coerce(z)
    e = np.zeros(za.shape[-1])
    e[-1] = h
    return (u(za + e) - u(za - e)) / (2 * h)


def fd_commutator(u: Callable, i: int, j: int, z, h: float = 1e-3) -> Array:
    """X_i X_j u - X_j X_i u by nested differencing."""
    xi = fd_vector_field(lambda w: fd_vector_field(u, j, w, h), i, z, h)
    xj = fd_vector_field(lambda w: fd_vector_field(u, i, w, h), j, z, h)
    return xi - xj


def apply_vector_field(j: int, u, z, h: float | None = None) -> Array:
    """X_j u at z: the closed form when ``u`` carries one, else a difference."""
    if isinstance(u, ScalarField):
        return u.grad(z)[..., j]
    za, n, _ = _coerce(z)
    if not 0 <= j < 2 * n:
        raise InvalidArgument(f"vector field index {j} out of range for H^{n}")
    return fd_vector_field(u, j, za, float(np.max(default_step(za))) if h is None else h)


def horizontal_hessian(u, z, h: float | None = None) -> Array:
    if isinstance(u, ScalarField):
        return u.hess(z)
    za, _, _ = _coerce(z)
    return fd_hessian(u, za, float(np.max(default_step(za))) if h is None else h)


def commutator_defect(i: int, j: int, u, z, h: float = 1e-3) -> Array:
    """(X_i X_j - X_j X_i) u - c_ij d_t u with c_ij = 4, -4 or 0."""
    za, n, _ = _coerce(z)
    c = 4.0 if j == i + n else (-4.0 if i == j + n else 0.0)
    dt = u.dt(za) if isinstance(u, ScalarField) else fd_dt(u, za, h)
    return fd_commutator(u, i, j, za, h) - c * dt


# --- coefficient fields ------------------------------------------------

@dataclass
class CoefficientField:
    """Symmetric matrix field A(z) with declared ellipticity bounds."""

    n: int
    lam: float
    Lam: float
    func: Callable
    name: str = "A"

    def __post_init__(self):
        if not 0 < self.lam <= self.Lam:
            raise InvalidArgument("need 0 < lambda <= Lambda")

    def __call__(self, z) -> Array:
        za, _, _ = _coerce(z, self.n)
        return self.func(za)

    @property
    def ratio(self) -> float:
        return self.Lam / self.lam

    def check_bounds(self, z, tol: float = 1e-12) -> bool:
        A = self(z)
        if not np.allclose(A, np.swapaxes(A, -1, -2), atol=tol):
            return False
        ev = np.linalg.eigvalsh(A)
        return bool(np.all(ev >= self.lam - tol) and np.all(ev <= self.Lam + tol))


def identity_field(n: int) -> CoefficientField:
    eye = np.eye(2 * n)
    return CoefficientField(n, 1.0, 1.0, lambda z: np.broadcast_to(eye, z.shape[:-1] + eye.shape).copy(),
                            "identity")


def constant_field(M, lam: float | None = None, Lam: float | None = None) -> CoefficientField:
    M = np.asarray(M, float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] % 2:
        raise InvalidArgument("constant coefficient must be a 2n x 2n matrix")
    if not np.allclose(M, M.T):
        raise InvalidArgument("coefficient matrix must be symmetric")
    ev = np.linalg.eigvalsh(M)
    lam = float(ev[0]) if lam is None else lam
    Lam = float(ev[-1]) if Lam is None else Lam
    return CoefficientField(M.shape[0] // 2, lam, Lam,
                            lambda z: np.broadcast_to(M, z.shape[:-1] + M.shape).copy(), "constant")


def random_matrix(n: int, lam: float, Lam: float, rng: np.random.Generator) -> Array:
    """Random symmetric matrix with spectrum in [lam, Lam], both ends attained."""
    q, _ = np.linalg.qr(rng.standard_normal((2 * n, 2 * n)))
    ev = rng.uniform(lam, Lam, 2 * n)
    ev[0], ev[-1] = lam, Lam
    return (q * ev) @ q.T


def rotating_field(lam: float, Lam: float, frequency: float = 1.0) -> CoefficientField:
    """n = 1 field with eigenvalues (Lam, lam) rotating along the group."""

    def func(z):
        ang = frequency * (z[..., 0] + 2 * z[..., 1] + z[..., 2])
        c, s = np.cos(ang), np.sin(ang)
        out = np.empty(z.shape[:-1] + (2, 2))
        out[..., 0, 0] = Lam * c * c + lam * s * s
        out[..., 1, 1] = Lam * s * s + lam * c * c
        out[..., 0, 1] = out[..., 1, 0] = (Lam - lam) * c * s
        return out

    return CoefficientField(1, lam, Lam, func, f"rotating({lam:g},{Lam:g},{frequency:g})")


def gradient_aligned_field(n: int, lam: float, Lam: float, along: Callable) -> CoefficientField:
    """Eigenvalue lam along the unit vector field ``along(z)``, Lam elsewhere.

    Where ``along`` vanishes the field is Lam * I.
    """

    def func(z):
        g = along(z)
        norm = np.linalg.norm(g, axis=-1, keepdims=True)
        e = np.divide(g, norm, out=np.zeros_like(g), where=norm > 0)
        eye = np.eye(2 * n)
        return Lam * eye - (Lam - lam) * e[..., :, None] * e[..., None, :]

    return CoefficientField(n, lam, Lam, func, "gradient-aligned")


def coefficient_from_text(text: str, n: int = 1, seed: int = 0) -> CoefficientField:
    """Parse a named generator.

    Accepted: ``identity``, ``diag(a b ...)`` with 2n entries,
    ``diagonal(lam Lam)``, ``rotating(lam Lam [freq])`` (alias
    ``rotating-anisotropy``) and ``random(lam Lam)``.
    """
    s = text.strip().lower()
    name, _, rest = s.partition("(")
    args = [float(v) for v in rest.rstrip(")").replace(",", " ").split()] if rest else []
    if name == "identity":
        return identity_field(n)
    if name == "diagonal":
        if len(args) != 2 or not 0 < args[0] <= args[1]:
            raise InvalidArgument("diagonal(lam Lam) needs 0 < lam <= Lam")
        return constant_field(np.diag([args[0]] * n + [args[1]] * n))
    if name == "diag":
        if len(args) != 2 * n:
            raise InvalidArgument(f"diag needs {2 * n} entries")
        return constant_field(np.diag(args))
    if name in ("rotating", "rotating-anisotropy"):
        if n != 1 or len(args) not in (2, 3):
            raise InvalidArgument("rotating(lam Lam [freq]) is defined for n = 1")
        return rotating_field(*args)
    if name == "random":
        if len(args) != 2:
            raise InvalidArgument("random(lam Lam)")
        M = random_matrix(n, args[0], args[1], np.random.default_rng(seed))
        return constant_field(M, args[0], args[1])
    raise InvalidArgument(f"unknown coefficient field {text!r}")


__all__ = [
    "ScalarField", "CoefficientField", "apply_LA", "coordinate_matrix", "horizontal_laplacian",
    "weighted_sup_norm", "fd_vector_field", "fd_hessian", "fd_dt", "fd_commutator",
    "apply_vector_field", "horizontal_hessian", "commutator_defect", "default_step",
    "identity_field", "constant_field", "random_matrix", "rotating_field",
    "gradient_aligned_field", "coefficient_from_text", "symplectic_matrix", "dim_from_size",
]
