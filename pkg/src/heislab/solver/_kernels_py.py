"""Pure-Python stencil kernels; the reference for the compiled versions.

Layout conventions shared with ``_kernels.pyx``:

* nodes are indexed flat as (i * nx + j) * nt + k for x1 = xs[i],
  x2 = xs[j], t = ts[k];
* each interior node owns up to ``MAX_ENTRIES`` stencil entries, padded
  with column -1;
* ``gs_sweep`` updates x[i] = (sum_j w_ij x_j - f_i) / d_i for the first
  ``n_interior`` entries of x, with w >= 0 stored in CSR form.
"""
from __future__ import annotations

import numpy as np

MAX_ENTRIES = 48
SNAP = 1e-9
LATTICE_TOL = 1e-13


def decompose(a: float, b: float, c: float):
    """Split [[a, b], [b, c]] into nonnegative weights along three directions.

    Diagonally dominant matrices use lattice directions e1, e2, e1 +- e2,
    so feet land on grid columns.  Otherwise the eigenvectors are used.
    """
    ab = abs(b)
    scale = max(abs(a), abs(c), 1.0)
    if a - ab >= -LATTICE_TOL * scale and c - ab >= -LATTICE_TOL * scale:
        sb = 1.0 if b >= 0 else -1.0
        return ((1.0, 0.0, max(a - ab, 0.0)),
                (0.0, 1.0, max(c - ab, 0.0)),
                (1.0, sb, ab))
    mean = 0.5 * (a + c)
    rad = np.hypot(0.5 * (a - c), b)
    mu1, mu2 = mean + rad, mean - rad
    if b != 0.0:
        v1, v2 = b, mu1 - a
    else:
        v1, v2 = (1.0, 0.0) if a >= c else (0.0, 1.0)
    norm = np.hypot(v1, v2)
    v1, v2 = v1 / norm, v2 / norm
    return ((v1, v2, mu1), (-v2, v1, mu2), (0.0, 0.0, 0.0))


def _bracket_uniform(value: float, origin: float, step: float, count: int):
    f = (value - origin) / step
    r = round(f)
    if abs(f - r) < SNAP:
        f = float(r)
    i0 = int(np.floor(f))
    w = f - i0
    if i0 < 0 or i0 >= count or (w > 0 and i0 + 1 >= count):
        return -1, 0.0
    return i0, w


def _bracket_sorted(value: float, ts: np.ndarray):
    nt = len(ts)
    k0 = int(np.searchsorted(ts, value, side="right")) - 1
    if k0 < 0 or k0 >= nt:
        return -1, 0.0
    if k0 == nt - 1:
        return (k0, 0.0) if value == ts[k0] else (-1, 0.0)
    w = (value - ts[k0]) / (ts[k0 + 1] - ts[k0])
    if w < SNAP:
        w = 0.0
    elif w > 1 - SNAP:
        k0, w = k0 + 1, 0.0
    return k0, w


def assemble_stencils(xs, ts, h, ijk, A):
    """Stencil columns and weights for every interior node.

    Returns (cols, vals, diag, failed) where ``failed`` is the row of the
    first node whose foot left the grid, or -1.
    """
    xs = np.asarray(xs, float)
    ts = np.asarray(ts, float)
    nx, nt = len(xs), len(ts)
    hx = xs[1] - xs[0]
    m = len(ijk)
    cols = np.full((m, MAX_ENTRIES), -1, dtype=np.int64)
    vals = np.zeros((m, MAX_ENTRIES))
    diag = np.zeros(m)
    inv_h2 = 1.0 / (h * h)
    for row in range(m):
        i, j, k = ijk[row]
        x1, x2, t = xs[i], xs[j], ts[k]
        e = 0
        dsum = 0.0
        for d1, d2, mu in decompose(A[row, 0, 0], A[row, 0, 1], A[row, 1, 1]):
            if mu <= 0.0:
                continue
            w0 = mu * inv_h2
            dsum += 2.0 * w0
            jx = -x2 * d1 + x1 * d2
            for s in (1.0, -1.0):
                i0, wx = _bracket_uniform(x1 + s * h * d1, xs[0], hx, nx)
                j0, wy = _bracket_uniform(x2 + s * h * d2, xs[0], hx, nx)
                k0, wt = _bracket_sorted(t + s * 2.0 * h * jx, ts)
                if i0 < 0 or j0 < 0 or k0 < 0:
                    return cols, vals, diag, row
                for ci, fi in ((0, 1.0 - wx), (1, wx)):
                    if fi == 0.0:
                        continue
                    for cj, fj in ((0, 1.0 - wy), (1, wy)):
                        if fj == 0.0:
                            continue
                        for ck, fk in ((0, 1.0 - wt), (1, wt)):
                            if fk == 0.0:
                                continue
                            cols[row, e] = ((i0 + ci) * nx + (j0 + cj)) * nt + (k0 + ck)
                            vals[row, e] = w0 * fi * fj * fk
                            e += 1
        diag[row] = -dsum
    return cols, vals, diag, -1


def gs_sweep(indptr, indices, data, diag, f, x, n_interior, clamp, reverse):
    """One Gauss-Seidel sweep in place.

    With ``clamp`` the convex part of each update is kept inside the range
    of the neighbour values it averages, which removes rounding overshoot
    without changing the exact-arithmetic iteration.
    """
    order = range(n_interior - 1, -1, -1) if reverse else range(n_interior)
    for i in order:
        s = 0.0
        lo, hi = np.inf, -np.inf
        for p in range(indptr[i], indptr[i + 1]):
            v = x[indices[p]]
            s += data[p] * v
            if v < lo:
                lo = v
            if v > hi:
                hi = v
        conv = s / diag[i]
        if clamp and indptr[i + 1] > indptr[i]:
            conv = min(max(conv, lo), hi)
        x[i] = conv - f[i] / diag[i]
