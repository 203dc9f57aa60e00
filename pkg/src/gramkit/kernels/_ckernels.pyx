# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend.

Accumulation order matches _pykernels exactly (products added in inner
index order, no FP contraction), so both backends agree bit for bit.
"""

import numpy as np


def gram_block(const double[:, :] a):
    """Packed lower triangle of a.T @ a, classical algorithm."""
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t n = a.shape[1]
    out = np.empty(n * (n + 1) // 2)
    cdef double[::1] c = out
    cdef Py_ssize_t i, j, k, pos = 0
    cdef double acc
    with nogil:
        for i in range(n):
            for j in range(i + 1):
                acc = 0.0
                for k in range(m):
                    acc = acc + a[k, i] * a[k, j]
                c[pos] = acc
                pos += 1
    return out


def matmul_block(const double[:, :] a, const double[:, :] b):
    """Classical product a @ b."""
    cdef Py_ssize_t p = a.shape[0]
    cdef Py_ssize_t q = a.shape[1]
    cdef Py_ssize_t r = b.shape[1]
    out = np.empty((p, r))
    cdef double[:, ::1] c = out
    cdef Py_ssize_t i, j, k
    cdef double acc
    with nogil:
        for i in range(p):
            for j in range(r):
                acc = 0.0
                for k in range(q):
                    acc = acc + a[i, k] * b[k, j]
                c[i, j] = acc
    return out


def transpose_tile(double[:, :] dst, const double[:, :] src,
                   Py_ssize_t r0, Py_ssize_t c0, Py_ssize_t rows, Py_ssize_t cols):
    """Copy src[r0:r0+rows, c0:c0+cols] transposed into dst."""
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(rows):
            for j in range(cols):
                dst[c0 + j, r0 + i] = src[r0 + i, c0 + j]
