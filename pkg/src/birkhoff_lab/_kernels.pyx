# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops.

Every function here has a line-for-line twin in ``_kernels_py`` and must
stay bit-identical with it: same operation order, no fused multiply-add.
"""

from libc.math cimport sqrt, fabs

import numpy as np

cdef double CLAMP_TOL = 1e-12


cdef inline void _decode_pair(double u, Py_ssize_t n, Py_ssize_t* lo, Py_ssize_t* hi) noexcept nogil:
    cdef Py_ssize_t m = n * (n - 1)
    cdef Py_ssize_t k = <Py_ssize_t>(u * m)
    cdef Py_ssize_t i, r, i2
    if k >= m:
        k = m - 1
    i = k // (n - 1)
    r = k % (n - 1)
    i2 = r + 1 if r >= i else r
    if i < i2:
        lo[0] = i
        hi[0] = i2
    else:
        lo[0] = i2
        hi[0] = i


def gibbs_moves(double[:, ::1] M, const double[:, ::1] u):
    """Apply ``u.shape[0]`` block moves to ``M`` in place.

    Returns -1 on success, otherwise the index of the move whose feasible
    interval was negative beyond 1e-12 (``M`` is left as it was before
    that move).
    """
    cdef Py_ssize_t n = M.shape[0]
    cdef Py_ssize_t k, i, i2, j, j2
    cdef double a, b, c, d, lo, hi, a2, b2, c2, d2
    cdef Py_ssize_t failed = -1
    with nogil:
        for k in range(u.shape[0]):
            _decode_pair(u[k, 0], n, &i, &i2)
            _decode_pair(u[k, 1], n, &j, &j2)
            a = M[i, j]
            b = M[i, j2]
            c = M[i2, j]
            d = M[i2, j2]
            lo = a - d
            if lo < 0.0:
                lo = 0.0
            hi = a + (b if b < c else c)
            if hi - lo < -CLAMP_TOL:
                failed = k
                break
            if hi <= lo:
                continue
            a2 = lo + u[k, 2] * (hi - lo)
            if a2 > hi:
                a2 = hi
            b2 = a + b - a2
            c2 = a + c - a2
            d2 = d + a2 - a
            if b2 < 0.0:
                b2 = 0.0
            if c2 < 0.0:
                c2 = 0.0
            if d2 < 0.0:
                d2 = 0.0
            M[i, j] = a2
            M[i, j2] = b2
            M[i2, j] = c2
            M[i2, j2] = d2
    return failed


def compensated_sums(const double[:, ::1] M):
    """Row and column sums with Neumaier compensation."""
    cdef Py_ssize_t n = M.shape[0], m = M.shape[1], i, j
    rows_arr = np.zeros(n)
    cols_arr = np.zeros(m)
    rc_arr = np.zeros(n)
    cc_arr = np.zeros(m)
    cdef double[::1] rows = rows_arr, cols = cols_arr
    cdef double[::1] rc = rc_arr, cc = cc_arr
    cdef double x, t
    with nogil:
        for i in range(n):
            for j in range(m):
                x = M[i, j]
                t = rows[i] + x
                if fabs(rows[i]) >= fabs(x):
                    rc[i] += (rows[i] - t) + x
                else:
                    rc[i] += (x - t) + rows[i]
                rows[i] = t
                t = cols[j] + x
                if fabs(cols[j]) >= fabs(x):
                    cc[j] += (cols[j] - t) + x
                else:
                    cc[j] += (x - t) + cols[j]
                cols[j] = t
        for i in range(n):
            rows[i] += rc[i]
        for j in range(m):
            cols[j] += cc[j]
    return rows_arr, cols_arr


def mean_pair_distance(const double[:, ::1] X, const double[:, ::1] Y):
    """Mean Euclidean distance over all (x, y) pairs."""
    cdef Py_ssize_t nx = X.shape[0], ny = Y.shape[0], dim = X.shape[1]
    cdef Py_ssize_t p, q, r
    cdef double total = 0.0, row, s, diff
    if Y.shape[1] != dim:
        raise ValueError("dimension mismatch")
    with nogil:
        for p in range(nx):
            row = 0.0
            for q in range(ny):
                s = 0.0
                for r in range(dim):
                    diff = X[p, r] - Y[q, r]
                    s += diff * diff
                row += sqrt(s)
            total += row
    return total / (<double>nx * <double>ny)


def transport_accept(const double[:, :, ::1] x, const double[::1] a, const double[::1] b):
    """Mask of free blocks whose completion to margins ``a``, ``b`` is nonnegative."""
    cdef Py_ssize_t count = x.shape[0], p = x.shape[1], q = x.shape[2]
    cdef Py_ssize_t s, i, j
    cdef double rest, corner
    cdef bint ok
    if a.shape[0] != p + 1 or b.shape[0] != q + 1:
        raise ValueError("margin lengths do not match the free block")
    mask_arr = np.zeros(count, dtype=np.uint8)
    colrest_arr = np.empty(q)
    cdef unsigned char[::1] mask = mask_arr
    cdef double[::1] colrest = colrest_arr
    with nogil:
        for s in range(count):
            ok = True
            corner = b[q]
            for i in range(p):
                rest = a[i]
                for j in range(q):
                    rest = rest - x[s, i, j]
                if rest < 0.0:
                    ok = False
                    break
                corner = corner - rest
            if not ok:
                continue
            for j in range(q):
                rest = b[j]
                for i in range(p):
                    rest = rest - x[s, i, j]
                if rest < 0.0:
                    ok = False
                    break
            if ok and corner >= 0.0:
                mask[s] = 1
    return mask_arr
