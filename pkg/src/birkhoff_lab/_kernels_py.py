"""Pure-Python twins of the compiled kernels in ``_kernels.pyx``.

``gibbs_moves`` and ``compensated_sums`` reproduce the compiled results
bit for bit. ``mean_pair_distance`` agrees to rounding only.
"""

import numpy as np

CLAMP_TOL = 1e-12


def _decode_pair(u, n):
    m = n * (n - 1)
    k = int(u * m)
    if k >= m:
        k = m - 1
    i = k // (n - 1)
    r = k % (n - 1)
    i2 = r + 1 if r >= i else r
    return (i, i2) if i < i2 else (i2, i)


def gibbs_moves(M, u):
    n = M.shape[0]
    rows = M.tolist()
    try:
        for k, (u_row, u_col, u_val) in enumerate(u.tolist()):
            i, i2 = _decode_pair(u_row, n)
            j, j2 = _decode_pair(u_col, n)
            ri = rows[i]
            ri2 = rows[i2]
            a = ri[j]
            b = ri[j2]
            c = ri2[j]
            d = ri2[j2]
            lo = a - d
            if lo < 0.0:
                lo = 0.0
            hi = a + (b if b < c else c)
            if hi - lo < -CLAMP_TOL:
                return k
            if hi <= lo:
                continue
            a2 = lo + u_val * (hi - lo)
            if a2 > hi:
                a2 = hi
            b2 = a + b - a2
            c2 = a + c - a2
            d2 = d + a2 - a
            ri[j] = a2
            ri[j2] = b2 if b2 >= 0.0 else 0.0
            ri2[j] = c2 if c2 >= 0.0 else 0.0
            ri2[j2] = d2 if d2 >= 0.0 else 0.0
        return -1
    finally:
        M[...] = rows


def compensated_sums(M):
    M = np.asarray(M, dtype=float)
    n, m = M.shape
    rows = np.zeros(n)
    rc = np.zeros(n)
    for j in range(m):
        x = M[:, j]
        t = rows + x
        big = np.abs(rows) >= np.abs(x)
        rc += np.where(big, (rows - t) + x, (x - t) + rows)
        rows = t
    cols = np.zeros(m)
    cc = np.zeros(m)
    for i in range(n):
        x = M[i, :]
        t = cols + x
        big = np.abs(cols) >= np.abs(x)
        cc += np.where(big, (cols - t) + x, (x - t) + cols)
        cols = t
    return rows + rc, cols + cc


def mean_pair_distance(X, Y, chunk=128):
    X = np.ascontiguousarray(X, dtype=float)
    Y = np.ascontiguousarray(Y, dtype=float)
    if X.shape[1] != Y.shape[1]:
        raise ValueError("dimension mismatch")
    total = 0.0
    for start in range(0, X.shape[0], chunk):
        block = X[start:start + chunk]
        diff = block[:, None, :] - Y[None, :, :]
        total += np.sqrt((diff * diff).sum(axis=2)).sum()
    return total / (X.shape[0] * Y.shape[0])


def transport_accept(x, a, b):
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    p, q = x.shape[1], x.shape[2]
    if a.shape[0] != p + 1 or b.shape[0] != q + 1:
        raise ValueError("margin lengths do not match the free block")
    last_col = a[:p] - x.sum(axis=2)
    last_row = b[:q] - x.sum(axis=1)
    corner = b[q] - last_col.sum(axis=1)
    ok = (last_col >= 0).all(axis=1) & (last_row >= 0).all(axis=1) & (corner >= 0)
    return ok.astype(np.uint8)
