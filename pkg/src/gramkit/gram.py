"""Recursive computation of the lower triangle of C = A^T A.

Each level splits A into quadrants with ceil/floor halving.  The two
diagonal blocks of C are sums of two smaller Gram products (four
self-recursive calls); the off-diagonal block is the sum of two Strassen
products of transposed quadrants.  Only packed lower-triangular results
are ever formed, so C costs n(n+1)/2 floats instead of n^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .matrix import (PackedLowerTriangular, as_array, merge_packed, split_dims,
                     transpose_array)
from .strassen import strassen_mult_count, strassen_product


@dataclass
class GramConfig:
    """base_threshold: largest min(m, n) still solved classically.
    count_mults: callers that want a multiplication tally pass a MultCounter
    alongside this flag."""

    base_threshold: int = 32
    count_mults: bool = False

    def __post_init__(self):
        if self.base_threshold < 1:
            raise ValueError("base_threshold must be >= 1")


class MultCounter:
    """Running tally of scalar multiplications performed by the kernels."""

    __slots__ = ("scalar_mults",)

    def __init__(self):
        self.scalar_mults = 0

    def add(self, k):
        self.scalar_mults += k


def gram(a, cfg=None, counter=None) -> PackedLowerTriangular:
    """Packed lower triangle of A^T A."""
    cfg = GramConfig() if cfg is None else cfg
    arr = as_array(a)
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("Gram product of an empty matrix")
    return PackedLowerTriangular(arr.shape[1], gram_packed(arr, cfg.base_threshold, counter))


def gram_base(a, counter=None) -> PackedLowerTriangular:
    """Classical lower-triangle Gram product (no recursion)."""
    arr = as_array(a)
    return PackedLowerTriangular(arr.shape[1], _base(arr, counter))


def _base(arr, counter):
    m, n = arr.shape
    if counter is not None:
        counter.add(m * n * (n + 1) // 2)
    return kernels.gram_block(arr)


def gram_packed(arr, threshold, counter=None) -> np.ndarray:
    """Array-level recursion returning the raw packed data."""
    m, n = arr.shape
    if min(m, n) <= threshold:
        return _base(arr, counter)
    d = split_dims(m, n)
    a11 = arr[:d.m1, :d.n1]
    a12 = arr[:d.m1, d.n1:]
    a21 = arr[d.m1:, :d.n1]
    a22 = arr[d.m1:, d.n1:]
    s1 = gram_packed(a11, threshold, counter)
    s2 = gram_packed(a21, threshold, counter)
    s3 = gram_packed(a12, threshold, counter)
    s4 = gram_packed(a22, threshold, counter)
    s5 = strassen_product(transpose_array(a12), a11, threshold, counter)
    s6 = strassen_product(transpose_array(a22), a21, threshold, counter)
    return merge_packed(s1 + s2, s5 + s6, s3 + s4, d.n1, d.n2)


def classical_gram(a) -> PackedLowerTriangular:
    """Independent reference: the plain classical Gram product.

    No recursion and no kernel dispatch; products are accumulated one row
    of A at a time, which reproduces the scalar triple loop bit for bit.
    Used by tests and by the CLI --check mode.
    """
    arr = as_array(a)
    n = arr.shape[1]
    c = np.zeros((n, n))
    for row in arr:
        c += row[:, None] * row[None, :]
    return PackedLowerTriangular(n, c[np.tril_indices(n)])


def gram_tolerance(a) -> float:
    """Acceptance bound for ||computed - reference||_F on this input."""
    arr = as_array(a)
    return 1e-9 * float(np.sum(arr * arr))


def gram_frobenius_error(result, reference) -> float:
    """Frobenius distance between two packed Gram results."""
    diff = result.unpack().array - reference.unpack().array
    return float(np.sqrt(np.sum(diff * diff)))


def gram_mult_count(m, n, base_threshold=32) -> int:
    """Exact scalar multiplications gram() performs on an m x n input."""
    if base_threshold < 1:
        raise ValueError("base_threshold must be >= 1")
    return _gram_count(m, n, base_threshold)


@lru_cache(maxsize=None)
def _gram_count(m, n, t):
    if min(m, n) <= t:
        return m * n * (n + 1) // 2
    m1, m2, n1, n2 = split_dims(m, n)
    return (_gram_count(m1, n1, t) + _gram_count(m2, n1, t)
            + _gram_count(m1, n2, t) + _gram_count(m2, n2, t)
            + strassen_mult_count(n2, m1, n1, t)
            + strassen_mult_count(n2, m2, n1, t))
