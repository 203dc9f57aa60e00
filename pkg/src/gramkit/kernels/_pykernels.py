"""Pure-NumPy kernel backend.

Every kernel adds products one inner index at a time, which gives each
output entry exactly the floating-point sequence of the scalar triple
loop.  The compiled backend follows the same order, so the two are
interchangeable bit for bit.
"""

import numpy as np

_tril_cache = {}


def _tril(n):
    idx = _tril_cache.get(n)
    if idx is None:
        idx = np.tril_indices(n)
        _tril_cache[n] = idx
    return idx


def gram_block(a):
    """Packed lower triangle of a.T @ a, classical algorithm."""
    a = np.asarray(a)
    n = a.shape[1]
    c = np.zeros((n, n))
    for row in a:
        c += row[:, None] * row[None, :]
    return c[_tril(n)]


def matmul_block(a, b):
    """Classical product a @ b."""
    a = np.asarray(a)
    b = np.asarray(b)
    c = np.zeros((a.shape[0], b.shape[1]))
    for k in range(a.shape[1]):
        c += a[:, k][:, None] * b[k][None, :]
    return c


def transpose_tile(dst, src, r0, c0, rows, cols):
    """Copy src[r0:r0+rows, c0:c0+cols] transposed into dst."""
    dst[c0:c0 + cols, r0:r0 + rows] = src[r0:r0 + rows, c0:c0 + cols].T
