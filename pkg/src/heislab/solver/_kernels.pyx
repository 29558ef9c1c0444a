# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled stencil kernels; see _kernels_py.py for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor, fabs, sqrt, round as cround

cdef int MAX_ENTRIES = 48
cdef double SNAP = 1e-9
cdef double LATTICE_TOL = 1e-13


cdef inline int _decompose(double a, double b, double c, double* d1, double* d2, double* mu) noexcept nogil:
    cdef double ab = fabs(b)
    cdef double scale = fabs(a)
    cdef double mean, rad, mu1, mu2, v1, v2, nrm, sb
    if fabs(c) > scale:
        scale = fabs(c)
    if scale < 1.0:
        scale = 1.0
    if a - ab >= -LATTICE_TOL * scale and c - ab >= -LATTICE_TOL * scale:
        sb = 1.0 if b >= 0 else -1.0
        d1[0] = 1.0; d2[0] = 0.0; mu[0] = a - ab if a - ab > 0 else 0.0
        d1[1] = 0.0; d2[1] = 1.0; mu[1] = c - ab if c - ab > 0 else 0.0
        d1[2] = 1.0; d2[2] = sb; mu[2] = ab
        return 0
    mean = 0.5 * (a + c)
    rad = sqrt(0.25 * (a - c) * (a - c) + b * b)
    mu1 = mean + rad
    mu2 = mean - rad
    if b != 0.0:
        v1 = b
        v2 = mu1 - a
    elif a >= c:
        v1 = 1.0
        v2 = 0.0
    else:
        v1 = 0.0
        v2 = 1.0
    nrm = sqrt(v1 * v1 + v2 * v2)
    v1 /= nrm
    v2 /= nrm
    d1[0] = v1; d2[0] = v2; mu[0] = mu1
    d1[1] = -v2; d2[1] = v1; mu[1] = mu2
    d1[2] = 0.0; d2[2] = 0.0; mu[2] = 0.0
    return 1


cdef inline int _bracket_uniform(double value, double origin, double step, Py_ssize_t count, double* w) noexcept nogil:
    cdef double f = (value - origin) / step
    cdef double r = cround(f)
    cdef long i0
    if fabs(f - r) < SNAP:
        f = r
    i0 = <long>floor(f)
    w[0] = f - i0
    if i0 < 0 or i0 >= count or (w[0] > 0 and i0 + 1 >= count):
        return -1
    return <int>i0


cdef inline long _bracket_sorted(double value, double[::1] ts, double* w) noexcept nogil:
    cdef Py_ssize_t nt = ts.shape[0]
    cdef Py_ssize_t lo = 0, hi = nt, mid
    cdef long k0
    # first index with ts[idx] > value, minus one
    while lo < hi:
        mid = (lo + hi) // 2
        if ts[mid] <= value:
            lo = mid + 1
        else:
            hi = mid
    k0 = lo - 1
    if k0 < 0 or k0 >= nt:
        return -1
    if k0 == nt - 1:
        w[0] = 0.0
        return k0 if value == ts[k0] else -1
    w[0] = (value - ts[k0]) / (ts[k0 + 1] - ts[k0])
    if w[0] < SNAP:
        w[0] = 0.0
    elif w[0] > 1 - SNAP:
        k0 += 1
        w[0] = 0.0
    return k0


def assemble_stencils(xs, ts, double h, ijk, A):
    cdef double[::1] xv = np.ascontiguousarray(xs, dtype=np.float64)
    cdef double[::1] tv = np.ascontiguousarray(ts, dtype=np.float64)
    cdef long[:, ::1] idx = np.ascontiguousarray(ijk, dtype=np.int64)
    cdef double[:, :, ::1] Av = np.ascontiguousarray(A, dtype=np.float64)
    cdef Py_ssize_t nx = xv.shape[0], nt = tv.shape[0], m = idx.shape[0]
    cols_arr = np.full((m, MAX_ENTRIES), -1, dtype=np.int64)
    vals_arr = np.zeros((m, MAX_ENTRIES))
    diag_arr = np.zeros(m)
    cdef long[:, ::1] cols = cols_arr
    cdef double[:, ::1] vals = vals_arr
    cdef double[::1] diag = diag_arr
    cdef double hx = xv[1] - xv[0]
    cdef double inv_h2 = 1.0 / (h * h)
    cdef double d1[3]
    cdef double d2[3]
    cdef double mu[3]
    cdef double fx[2]
    cdef double fy[2]
    cdef double ft[2]
    cdef double x1, x2, t, w0, dsum, jx, s, wx, wy, wt
    cdef Py_ssize_t row, e, d, ci, cj, ck
    cdef long i0, j0, k0
    cdef int si
    cdef long failed = -1
    with nogil:
        for row in range(m):
            x1 = xv[idx[row, 0]]
            x2 = xv[idx[row, 1]]
            t = tv[idx[row, 2]]
            _decompose(Av[row, 0, 0], Av[row, 0, 1], Av[row, 1, 1], d1, d2, mu)
            e = 0
            dsum = 0.0
            for d in range(3):
                if mu[d] <= 0.0:
                    continue
                w0 = mu[d] * inv_h2
                dsum += 2.0 * w0
                jx = -x2 * d1[d] + x1 * d2[d]
                for si in range(2):
                    s = 1.0 if si == 0 else -1.0
                    i0 = _bracket_uniform(x1 + s * h * d1[d], xv[0], hx, nx, &wx)
                    j0 = _bracket_uniform(x2 + s * h * d2[d], xv[0], hx, nx, &wy)
                    k0 = _bracket_sorted(t + s * 2.0 * h * jx, tv, &wt)
                    if i0 < 0 or j0 < 0 or k0 < 0:
                        failed = row
                        break
                    fx[0] = 1.0 - wx; fx[1] = wx
                    fy[0] = 1.0 - wy; fy[1] = wy
                    ft[0] = 1.0 - wt; ft[1] = wt
                    for ci in range(2):
                        if fx[ci] == 0.0:
                            continue
                        for cj in range(2):
                            if fy[cj] == 0.0:
                                continue
                            for ck in range(2):
                                if ft[ck] == 0.0:
                                    continue
                                cols[row, e] = ((i0 + ci) * nx + (j0 + cj)) * nt + (k0 + ck)
                                vals[row, e] = w0 * fx[ci] * fy[cj] * ft[ck]
                                e += 1
                if failed >= 0:
                    break
            if failed >= 0:
                break
            diag[row] = -dsum
    return cols_arr, vals_arr, diag_arr, failed


def gs_sweep(indptr, indices, data, diag, f, x, Py_ssize_t n_interior, bint clamp, bint reverse):
    cdef int[::1] ip = indptr
    cdef int[::1] ix = indices
    cdef double[::1] dv = data
    cdef double[::1] dg = diag
    cdef double[::1] fv = f
    cdef double[::1] xv = x
    cdef Py_ssize_t q, i, p
    cdef double s, lo, hi, v, conv
    with nogil:
        for q in range(n_interior):
            i = n_interior - 1 - q if reverse else q
            s = 0.0
            lo = 1e308
            hi = -1e308
            for p in range(ip[i], ip[i + 1]):
                v = xv[ix[p]]
                s += dv[p] * v
                if v < lo:
                    lo = v
                if v > hi:
                    hi = v
            conv = s / dg[i]
            if clamp and ip[i + 1] > ip[i]:
                if conv < lo:
                    conv = lo
                elif conv > hi:
                    conv = hi
            xv[i] = conv - fv[i] / dg[i]
