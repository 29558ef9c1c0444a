"""Domains in H^n used by the solver and the experiments.

Each domain is an open set with an analytic membership test and a level
function that is negative inside.  Domains round-trip through a small
text syntax, e.g. ``intersection(ball(center=0 0 0, radius=2), halfspace())``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .hgroup import J, _coerce, compose, gauge4, inverse


@dataclass(frozen=True)
class BoundaryClass:
    location: str  # "interior", "boundary" or "exterior"
    characteristic: bool | None  # None when unknown or not on the boundary


class Domain:
    kind = "domain"

    def level(self, z) -> np.ndarray:
        raise NotImplementedError

    def contains(self, z) -> np.ndarray:
        return self.level(z) < 0

    def horizontal_level_gradient(self, z) -> np.ndarray | None:
        return None

    def bounding_box(self, n: int):
        inf = np.full(2 * n + 1, np.inf)
        return -inf, inf.copy()

    def to_text(self) -> str:
        raise NotImplementedError

    def __str__(self):
        return self.to_text()


def _fmt(v: float) -> str:
    return repr(float(v))


@dataclass(frozen=True)
class GaugeBall(Domain):
    center: tuple
    radius: float
    kind = "ball"

    def __post_init__(self):
        c = tuple(float(v) for v in self.center)
        object.__setattr__(self, "center", c)
        if not self.radius > 0:
            raise InvalidArgument("ball radius must be positive")
        _coerce(np.array(c))

    def _local(self, z):
        za, _, _ = _coerce(z, len(self.center) // 2)
        c = np.broadcast_to(np.array(self.center), za.shape)
        return compose(inverse(c), za)

    def level(self, z):
        return gauge4(self._local(z)) - self.radius ** 4

    def horizontal_level_gradient(self, z):
        w = self._local(z)
        x, t = w[..., :-1], w[..., -1:]
        s = np.sum(x * x, axis=-1, keepdims=True)
        return 4.0 * s * x + 4.0 * t * J(x)

    def bounding_box(self, n):
        c = np.array(self.center)
        r = self.radius
        cx = c[:-1]
        lo = np.concatenate([cx - r, [c[-1] - r * r - 2 * r * np.linalg.norm(cx)]])
        hi = np.concatenate([cx + r, [c[-1] + r * r + 2 * r * np.linalg.norm(cx)]])
        return lo, hi

    def to_text(self):
        return f"ball(center={' '.join(_fmt(v) for v in self.center)}, radius={_fmt(self.radius)})"


@dataclass(frozen=True)
class HalfSpace(Domain):
    """{t > 0}."""

    kind = "halfspace"

    def level(self, z):
        za, _, _ = _coerce(z)
        return -za[..., -1]

    def horizontal_level_gradient(self, z):
        za, _, _ = _coerce(z)
        return -2.0 * J(za[..., :-1])

    def bounding_box(self, n):
        lo, hi = Domain.bounding_box(self, n)
        lo[-1] = 0.0
        return lo, hi

    def to_text(self):
        return "halfspace()"


@dataclass(frozen=True)
class Paraboloid(Domain):
    """{t > M |x|^2}."""

    m: float
    kind = "paraboloid"

    def level(self, z):
        za, _, _ = _coerce(z)
        return self.m * np.sum(za[..., :-1] ** 2, axis=-1) - za[..., -1]

    def horizontal_level_gradient(self, z):
        za, _, _ = _coerce(z)
        x = za[..., :-1]
        return 2.0 * self.m * x - 2.0 * J(x)

    def bounding_box(self, n):
        lo, hi = Domain.bounding_box(self, n)
        lo[-1] = min(0.0, 0.0 if self.m >= 0 else -np.inf)
        return lo, hi

    def to_text(self):
        return f"paraboloid(m={_fmt(self.m)})"


@dataclass(frozen=True)
class Rectangle(Domain):
    """{0 < t < delta r^2, |x| < r}."""

    r: float
    delta: float
    kind = "rectangle"

    def __post_init__(self):
        if not (self.r > 0 and self.delta > 0):
            raise InvalidArgument("rectangle needs r > 0 and delta > 0")

    def _faces(self, z):
        za, _, _ = _coerce(z)
        t = za[..., -1]
        s = np.sum(za[..., :-1] ** 2, axis=-1)
        return np.stack([-t, t - self.delta * self.r ** 2, s - self.r ** 2], axis=-1)

    def level(self, z):
        return np.max(self._faces(z), axis=-1)

    def bounding_box(self, n):
        lo = np.full(2 * n + 1, -self.r)
        hi = np.full(2 * n + 1, self.r)
        lo[-1], hi[-1] = 0.0, self.delta * self.r ** 2
        return lo, hi

    def to_text(self):
        return f"rectangle(r={_fmt(self.r)}, delta={_fmt(self.delta)})"


@dataclass(frozen=True)
class Intersection(Domain):
    parts: tuple
    kind = "intersection"

    def __post_init__(self):
        if len(self.parts) < 1:
            raise InvalidArgument("intersection needs at least one part")
        object.__setattr__(self, "parts", tuple(self.parts))

    def level(self, z):
        return np.max(np.stack([p.level(z) for p in self.parts], axis=-1), axis=-1)

    def bounding_box(self, n):
        lo, hi = Domain.bounding_box(self, n)
        for p in self.parts:
            plo, phi = p.bounding_box(n)
            lo, hi = np.maximum(lo, plo), np.minimum(hi, phi)
        return lo, hi

    def to_text(self):
        return "intersection(" + ", ".join(p.to_text() for p in self.parts) + ")"


@dataclass(frozen=True)
class Complement(Domain):
    """Open complement of the closure of another domain."""

    part: Domain
    kind = "complement"

    def level(self, z):
        return -self.part.level(z)

    def horizontal_level_gradient(self, z):
        g = self.part.horizontal_level_gradient(z)
        return None if g is None else -g

    def to_text(self):
        return f"complement({self.part.to_text()})"


def classify_boundary(domain: Domain, z, tol: float = 1e-10) -> BoundaryClass:
    """Locate a single point relative to the domain.

    Boundary points of smooth kinds are flagged characteristic when the
    horizontal gradient of the level function vanishes there.  Rectangle
    faces are handled one at a time; edges and intersections report
    ``None``.
    """
    za, _, _ = _coerce(z)
    if za.ndim != 1:
        raise InvalidArgument("classify_boundary takes a single point")
    lev = float(domain.level(za))
    if lev < -tol:
        return BoundaryClass("interior", None)
    if lev > tol:
        return BoundaryClass("exterior", None)
    if isinstance(domain, Rectangle):
        faces = domain._faces(za)
        active = np.flatnonzero(np.abs(faces) <= tol)
        if len(active) != 1:
            return BoundaryClass("boundary", None)
        if active[0] == 2:
            return BoundaryClass("boundary", False)
        return BoundaryClass("boundary", bool(np.linalg.norm(za[:-1]) <= tol))
    grad = domain.horizontal_level_gradient(za)
    if grad is None:
        return BoundaryClass("boundary", None)
    return BoundaryClass("boundary", bool(np.linalg.norm(grad) <= tol))


# --- text round trip ---------------------------------------------------

def _split_top(s: str, sep: str = ","):
    out, depth, cur = [], 0, []
    for ch in s:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == sep and depth == 0:
            out.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    tail = "".join(cur).strip()
    if tail:
        out.append(tail)
    return out


def _kwargs(body: str) -> dict:
    out = {}
    for item in _split_top(body):
        if "=" not in item:
            raise InvalidArgument(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def parse_domain(text: str) -> Domain:
    """Inverse of ``Domain.to_text``."""
    s = text.strip()
    if "(" not in s or not s.endswith(")"):
        raise InvalidArgument(f"malformed domain {text!r}")
    name, body = s.split("(", 1)
    name, body = name.strip().lower(), body[:-1]
    try:
        if name == "ball":
            kw = _kwargs(body)
            center = tuple(float(v) for v in kw["center"].split())
            return GaugeBall(center, float(kw["radius"]))
        if name == "halfspace":
            return HalfSpace()
        if name == "paraboloid":
            return Paraboloid(float(_kwargs(body)["m"]))
        if name == "rectangle":
            kw = _kwargs(body)
            return Rectangle(float(kw["r"]), float(kw["delta"]))
        if name == "intersection":
            return Intersection(tuple(parse_domain(p) for p in _split_top(body)))
        if name == "complement":
            return Complement(parse_domain(body))
    except (KeyError, ValueError) as exc:
        raise InvalidArgument(f"malformed domain {text!r}: {exc}") from exc
    raise InvalidArgument(f"unknown domain kind {name!r}")
