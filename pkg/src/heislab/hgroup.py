"""Heisenberg group H^n: group law, dilations, gauge, metric and ball volume.

Points are stored as arrays whose last axis has length 2n+1, laid out as
(x_1, ..., x_2n, t).  Every function also accepts a :class:`GroupPoint`
and then returns one.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import DomainError, InvalidArgument


@dataclass(frozen=True)
class GroupPoint:
    """A single point (x, t) of H^n with x of length 2n."""

    x: tuple
    t: float

    def __post_init__(self):
        x = tuple(float(v) for v in self.x)
        if len(x) == 0 or len(x) % 2:
            raise InvalidArgument(f"horizontal part must have even length, got {len(x)}")
        if not (np.all(np.isfinite(x)) and np.isfinite(self.t)):
            raise InvalidArgument("point coordinates must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n(self) -> int:
        return len(self.x) // 2

    def as_array(self) -> np.ndarray:
        return np.array(self.x + (self.t,))

    @classmethod
    def from_array(cls, arr) -> "GroupPoint":
        arr = np.asarray(arr, dtype=float)
        return cls(tuple(arr[:-1]), float(arr[-1]))


def dim_from_size(size: int) -> int:
    """Return n given the ambient dimension 2n+1."""
    if size < 3 or size % 2 == 0:
        raise InvalidArgument(f"ambient dimension must be 2n+1 with n>=1, got {size}")
    return (size - 1) // 2


def _coerce(z, n: int | None = None):
    if isinstance(z, GroupPoint):
        arr, was_point = z.as_array(), True
    else:
        arr, was_point = np.asarray(z, dtype=float), False
    if arr.ndim == 0:
        raise InvalidArgument("a point needs 2n+1 coordinates")
    m = dim_from_size(arr.shape[-1])
    if n is not None and m != n:
        raise InvalidArgument(f"expected points of H^{n}, got H^{m}")
    return arr, m, was_point


def _wrap(arr, was_point):
    return GroupPoint.from_array(arr) if was_point else arr


def homogeneous_dimension(n: int) -> int:
    return 2 * n + 2


def J(x: np.ndarray) -> np.ndarray:
    """Apply the symplectic matrix [[0, -I], [I, 0]] along the last axis."""
    n = x.shape[-1] // 2
    return np.concatenate([-x[..., n:], x[..., :n]], axis=-1)


def symplectic_matrix(n: int) -> np.ndarray:
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]])


def compose(z, w):
    """Group product z o w = (x + xi, t + tau + 2<Jx, xi>)."""
    za, n, zp = _coerce(z)
    wa, _, wp = _coerce(w, n)
    x, xi = za[..., :-1], wa[..., :-1]
    t = za[..., -1] + wa[..., -1] + 2.0 * np.sum(J(x) * xi, axis=-1)
    out = np.concatenate([x + xi, t[..., None]], axis=-1)
    return _wrap(out, zp and wp)


def inverse(z):
    za, _, zp = _coerce(z)
    return _wrap(-za, zp)


def identity(n: int) -> GroupPoint:
    return GroupPoint((0.0,) * (2 * n), 0.0)


def dilate(z, r: float):
    """Anisotropic dilation (x, t) -> (r x, r^2 t)."""
    za, _, zp = _coerce(z)
    out = za.copy()
    out[..., :-1] *= r
    out[..., -1] *= r * r
    return _wrap(out, zp)


def gauge4(z) -> np.ndarray:
    """Fourth power of the gauge, |x|^4 + t^2."""
    za, _, _ = _coerce(z)
    s = np.sum(za[..., :-1] ** 2, axis=-1)
    return s * s + za[..., -1] ** 2


def gauge(z) -> np.ndarray:
    """Homogeneous gauge rho(x, t) = (|x|^4 + t^2)^(1/4)."""
    out = gauge4(z) ** 0.25
    return float(out) if np.ndim(out) == 0 else out


def dist(z, w) -> np.ndarray:
    """Left-invariant gauge distance rho(z^-1 o w)."""
    return gauge(compose(inverse(z), w))


def translate_to(p, z):
    """Return p^-1 o z, the point z seen from base point p."""
    return compose(inverse(p), z)


# --- ball volume --------------------------------------------------------

DEFAULT_VOLUME_RESOLUTION = {1: 1200, 2: 60, 3: 14}


def _cache_dir() -> Path | None:
    root = os.environ.get("HEISLAB_CACHE")
    return Path(root) if root else None


def _midpoint_ball_volume(n: int, resolution: int) -> float:
    # Midpoint rule on [0,1]^(2n+1) using the sign symmetry of the ball.
    # The indicator depends on |x| and t only, so the x-grid values are
    # sorted once and each t-slice is counted by bisection.
    h = 1.0 / resolution
    nodes = (np.arange(resolution) + 0.5) * h
    sq = nodes ** 2
    radial = sq
    for _ in range(2 * n - 1):
        radial = np.add.outer(radial, sq).ravel()
    quartic = np.sort(radial ** 2)
    counts = np.searchsorted(quartic, 1.0 - nodes ** 2, side="left")
    total = float(np.sum(counts))
    return total * h ** (2 * n + 1) * 2.0 ** (2 * n + 1)


def cached_float(key: str, compute) -> float:
    """Return compute(), memoized on disk under ``HEISLAB_CACHE`` when it is set."""
    cache = _cache_dir()
    if cache is None:
        return float(compute())
    path = cache / f"{key}.json"
    if path.exists():
        try:
            return float(json.loads(path.read_text())["value"])
        except (ValueError, KeyError):
            pass
    value = float(compute())
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f"{path.name}.{os.getpid()}.tmp")
    tmp.write_text(json.dumps({"key": key, "value": value}))
    os.replace(tmp, path)
    return value


@lru_cache(maxsize=None)
def ball_volume(n: int, resolution: int | None = None) -> float:
    """Lebesgue measure of the unit gauge ball B_1 in H^n, by quadrature.

    The value is cached in memory and, when ``HEISLAB_CACHE`` is set, on
    disk keyed by (n, resolution).
    """
    if n < 1:
        raise InvalidArgument("n must be >= 1")
    if resolution is None:
        resolution = DEFAULT_VOLUME_RESOLUTION.get(n, 10)
    return cached_float(f"ball_volume_n{n}_r{resolution}", lambda: _midpoint_ball_volume(n, resolution))


def ball_measure(n: int, r: float) -> float:
    """|B_r| = r^Q |B_1|."""
    if r <= 0:
        raise InvalidArgument("radius must be positive")
    return r ** homogeneous_dimension(n) * ball_volume(n)


# --- exterior cone condition -------------------------------------------

def exterior_ball_for_cone(z0, zbar, theta_bar: float, r: float):
    """Ball inside B_r(z0) obtained by dilating the cone's reference ball.

    Given a truncated cone with vertex z0 built on B_{theta_bar}(zbar),
    return (center, radius) with center = z0 o delta_s(zbar),
    s = r / (theta_bar + rho(zbar)) and radius theta * r,
    theta = theta_bar / (theta_bar + rho(zbar)).
    """
    z0a, n, _ = _coerce(z0)
    zba, _, _ = _coerce(zbar, n)
    if not theta_bar > 0:
        raise InvalidArgument("theta_bar must be positive")
    rho_bar = gauge(zba)
    if not 0 < r <= theta_bar + rho_bar:
        raise InvalidArgument("r must lie in (0, theta_bar + rho(zbar)]")
    scale = theta_bar + rho_bar
    center = compose(z0a, dilate(zba, r / scale))
    return GroupPoint.from_array(center), theta_bar / scale * r


def _sobol(dim: int, count: int, seed: int) -> np.ndarray:
    """First ``count`` points of a scrambled Sobol block of power-of-two size."""
    from scipy.stats import qmc

    m = max(0, int(np.ceil(np.log2(max(count, 1)))))
    return qmc.Sobol(d=dim, scramble=True, seed=seed).random_base2(m)[:count]


def gauge_sphere_points(n: int, count: int, seed: int = 0) -> np.ndarray:
    """Deterministic points on the unit gauge sphere |x|^4 + t^2 = 1."""
    u = _sobol(2 * n + 1, count, seed)
    psi = (u[:, 0] - 0.5) * np.pi
    t = np.sin(psi)
    rad = np.sqrt(np.cos(psi))
    direction = _unit_vectors(u[:, 1:], 2 * n)
    return np.concatenate([rad[:, None] * direction, t[:, None]], axis=1)


def _unit_vectors(u: np.ndarray, dim: int) -> np.ndarray:
    from scipy.special import ndtri

    g = ndtri(np.clip(u[:, :dim], 1e-12, 1 - 1e-12))
    if dim == 2:
        ang = 2 * np.pi * u[:, 0]
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sphere_around(center, radius: float, count: int, seed: int = 0) -> np.ndarray:
    """Points of the gauge sphere of given radius around ``center``."""
    ca, n, _ = _coerce(center)
    if not radius > 0:
        raise InvalidArgument("radius must be positive")
    pts = dilate(gauge_sphere_points(n, count, seed), radius)
    return compose(np.broadcast_to(ca, pts.shape), pts)


def ball_samples(center, radius: float, count: int, seed: int = 0) -> np.ndarray:
    """Deterministic low-discrepancy points inside the gauge ball."""
    ca, n, _ = _coerce(center)
    m = max(6, int(np.ceil(np.log2(2 * count))))
    while True:
        u = _sobol(2 * n + 1, 2 ** m, seed) * 2.0 - 1.0
        keep = u[gauge4(u) < 1.0]
        if len(keep) >= count:
            break
        m += 1
    pts = dilate(keep[:count], radius)
    return compose(np.broadcast_to(ca, pts.shape), pts)


def check_pole(z, tol: float = 0.0):
    """Raise DomainError if any point sits at the identity."""
    za, _, _ = _coerce(z)
    if np.any(gauge4(za) <= tol):
        raise DomainError("evaluation at the pole (origin)")
