"""Tensor grids for H^1: uniform in x1, x2 and arbitrary monotone in t."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..domains import Domain
from ..errors import InvalidArgument

MAX_GRID_NODES = 97 ** 3


@dataclass
class Grid:
    """Nodes xs x xs x ts.  ``step`` is the stencil step along each direction."""

    xs: np.ndarray
    ts: np.ndarray
    step: float

    def __post_init__(self):
        self.xs = np.asarray(self.xs, float)
        self.ts = np.asarray(self.ts, float)
        if len(self.xs) < 3 or len(self.ts) < 3:
            raise InvalidArgument("grid needs at least 3 nodes per axis")
        dx = np.diff(self.xs)
        if not np.allclose(dx, dx[0], rtol=1e-12, atol=0):
            raise InvalidArgument("x nodes must be uniform")
        if np.any(np.diff(self.ts) <= 0):
            raise InvalidArgument("t nodes must be strictly increasing")

    @property
    def hx(self) -> float:
        return float(self.xs[1] - self.xs[0])

    @property
    def shape(self):
        return len(self.xs), len(self.xs), len(self.ts)

    @property
    def size(self) -> int:
        nx, _, nt = self.shape
        return nx * nx * nt

    def points(self) -> np.ndarray:
        X1, X2, T = np.meshgrid(self.xs, self.xs, self.ts, indexing="ij")
        return np.stack([X1.ravel(), X2.ravel(), T.ravel()], axis=1)

    def unravel(self, flat) -> np.ndarray:
        return np.stack(np.unravel_index(np.asarray(flat), self.shape), axis=-1)

    def describe(self) -> str:
        nx, _, nt = self.shape
        return (f"{nx}x{nx}x{nt} hx={self.hx:.6g} ht_min={np.min(np.diff(self.ts)):.6g} "
                f"ht_max={np.max(np.diff(self.ts)):.6g}")


def graded_axis(lo: float, hi: float, fine: float, coarse: float, focus: float, growth: float = 1.15,
                focus_hi: float | None = None):
    """Monotone nodes on [lo, hi] containing ``focus``.

    Spacing is ``fine`` on [focus, focus_hi] (a single point by default)
    and grows geometrically by ``growth`` up to ``coarse`` outside it.
    The end points are included; a sliver cell at either end is merged
    into its neighbour, so no spacing exceeds 1.25 * coarse.
    """
    focus_hi = focus if focus_hi is None else min(focus_hi, hi)
    if not (lo <= focus <= focus_hi <= hi and 0 < fine <= coarse and growth >= 1):
        raise InvalidArgument("bad graded-axis parameters")
    band = focus + fine * np.arange(int(math.ceil((focus_hi - focus) / fine - 1e-9)) + 1)
    band = band[band < hi]
    up, down = list(band), [focus]
    step = fine
    while up[-1] < hi:
        up.append(min(up[-1] + step, hi))
        step = min(step * growth, coarse)
    step = fine
    while down[-1] > lo:
        down.append(max(down[-1] - step, lo))
        step = min(step * growth, coarse)
    nodes = np.array(down[::-1] + up[1:])
    # drop a sliver at either end so spacing stays comparable
    if len(nodes) > 3 and nodes[-1] - nodes[-2] < 0.25 * fine:
        nodes = np.delete(nodes, -2)
    if len(nodes) > 3 and nodes[1] - nodes[0] < 0.25 * fine:
        nodes = np.delete(nodes, 1)
    return nodes


def grid_for_domain(domain: Domain, hx: float, kappa: float = 1.0, t_focus: float | None = None,
                    growth: float = 1.15, ht_max: float | None = None, box=None,
                    t_focus_hi: float | None = None) -> Grid:
    """Grid covering the domain's bounding box plus room for stencil feet.

    The t-spacing is ``kappa * hx**2``; with ``t_focus`` set it is that fine
    only on [t_focus, t_focus_hi] and grows geometrically to ``ht_max``
    elsewhere.
    """
    if not hx > 0 or not kappa > 0:
        raise InvalidArgument("hx and kappa must be positive")
    if box is None:
        lo, hi = domain.bounding_box(1)
    else:
        lo, hi = (np.asarray(b, float) for b in box)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise InvalidArgument("domain is unbounded; pass an explicit box")
    xr = max(abs(lo[0]), abs(hi[0]), abs(lo[1]), abs(hi[1]))
    # feet move one cell in x and up to 2 * step * |x| * sqrt(2) in t
    half = hx * (math.ceil(xr / hx - 1e-9) + 2)
    count = int(round(2 * half / hx)) + 1
    xs = -half + hx * np.arange(count)
    ht = kappa * hx * hx
    pad_t = 2 * hx * (half + hx) * math.sqrt(2.0) + 2 * (ht_max or ht)
    tlo, thi = lo[2] - pad_t, hi[2] + pad_t
    if t_focus is None:
        nt = int(math.ceil((thi - tlo) / ht)) + 1
        ts = tlo + ht * np.arange(nt)
    else:
        ts = graded_axis(tlo, thi, ht, max(ht_max or 16 * ht, ht), t_focus, growth, t_focus_hi)
    return _trim_t(Grid(xs, ts, hx), domain)


def _trim_t(grid: Grid, domain: Domain) -> Grid:
    """Drop t-layers that no interior node or stencil foot can reach."""
    pts = grid.points()
    inside = domain.contains(pts)
    if not np.any(inside):
        return grid
    p = pts[inside]
    reach = 2 * grid.step * math.sqrt(2.0) * np.hypot(np.abs(p[:, 0]) + grid.hx, np.abs(p[:, 1]) + grid.hx)
    lo = np.min(p[:, 2] - reach)
    hi = np.max(p[:, 2] + reach)
    ts = grid.ts
    k0 = max(int(np.searchsorted(ts, lo, side="right")) - 2, 0)
    k1 = min(int(np.searchsorted(ts, hi, side="left")) + 2, len(ts))
    out = Grid(grid.xs, ts[k0:k1], grid.step)
    if out.size > MAX_GRID_NODES:
        raise InvalidArgument(f"grid {out.describe()} exceeds the {MAX_GRID_NODES} node budget")
    return out
