"""Strassen multiplication for general rectangular matrices.

Odd dimensions are handled by dynamic peeling: the even core is
multiplied with the seven-product recursion, then the stripped trailing
row/column contributions are patched in with classical products.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .matrix import DenseMatrix, as_array


@dataclass
class StrassenConfig:
    base_threshold: int = 32
    count_mults: bool = False

    def __post_init__(self):
        if self.base_threshold < 1:
            raise ValueError("base_threshold must be >= 1")


def classical_matmul(a, b) -> DenseMatrix:
    """Plain triple-loop product, p*q*r multiplications; base case and the
    reference the recursion is checked against."""
    aa, bb = as_array(a), as_array(b)
    if aa.shape[1] != bb.shape[0]:
        raise ValueError(f"inner dimensions disagree: {aa.shape} x {bb.shape}")
    return DenseMatrix(kernels.matmul_block(aa, bb))


def strassen_matmul(a, b, cfg=None, counter=None) -> DenseMatrix:
    """Product a @ b via Strassen recursion down to cfg.base_threshold."""
    cfg = StrassenConfig() if cfg is None else cfg
    aa, bb = as_array(a), as_array(b)
    if aa.shape[1] != bb.shape[0]:
        raise ValueError(f"inner dimensions disagree: {aa.shape} x {bb.shape}")
    if aa.shape[0] < 1 or aa.shape[1] < 1 or bb.shape[1] < 1:
        raise ValueError("empty operand")
    return DenseMatrix(strassen_product(aa, bb, cfg.base_threshold, counter))


def classical_product(a, b, counter=None) -> np.ndarray:
    if counter is not None:
        counter.add(a.shape[0] * a.shape[1] * b.shape[1])
    return kernels.matmul_block(a, b)


def strassen_product(a, b, threshold, counter=None) -> np.ndarray:
    """Array-level recursion; operands must have agreeing inner dims."""
    p, q = a.shape
    r = b.shape[1]
    if min(p, q, r) <= threshold:
        return classical_product(a, b, counter)

    pc, qc, rc = p & ~1, q & ~1, r & ~1
    ph, qh, rh = pc // 2, qc // 2, rc // 2
    a11 = a[:ph, :qh]
    a12 = a[:ph, qh:qc]
    a21 = a[ph:pc, :qh]
    a22 = a[ph:pc, qh:qc]
    b11 = b[:qh, :rh]
    b12 = b[:qh, rh:rc]
    b21 = b[qh:qc, :rh]
    b22 = b[qh:qc, rh:rc]

    m1 = strassen_product(a11 + a22, b11 + b22, threshold, counter)
    m2 = strassen_product(a21 + a22, b11, threshold, counter)
    m3 = strassen_product(a11, b12 - b22, threshold, counter)
    m4 = strassen_product(a22, b21 - b11, threshold, counter)
    m5 = strassen_product(a11 + a12, b22, threshold, counter)
    m6 = strassen_product(a21 - a11, b11 + b12, threshold, counter)
    m7 = strassen_product(a12 - a22, b21 + b22, threshold, counter)

    d = np.empty((p, r))
    d[:ph, :rh] = m1 + m4 - m5 + m7
    d[:ph, rh:rc] = m3 + m5
    d[ph:pc, :rh] = m2 + m4
    d[ph:pc, rh:rc] = m1 - m2 + m3 + m6

    if q & 1:
        # rank-1 contribution of the stripped inner column/row
        d[:pc, :rc] += classical_product(a[:pc, qc:], b[qc:, :rc], counter)
    if r & 1:
        d[:pc, rc:] = classical_product(a[:pc, :], b[:, rc:], counter)
    if p & 1:
        d[pc:, :] = classical_product(a[pc:, :], b, counter)
    return d


def strassen_mult_count(p, q, r, base_threshold=32) -> int:
    """Exact scalar multiplications strassen_matmul performs on p x q @ q x r."""
    if base_threshold < 1:
        raise ValueError("base_threshold must be >= 1")
    return _count(p, q, r, base_threshold)


@lru_cache(maxsize=None)
def _count(p, q, r, t):
    if min(p, q, r) <= t:
        return p * q * r
    pc, qc, rc = p & ~1, q & ~1, r & ~1
    total = 7 * _count(pc // 2, qc // 2, rc // 2, t)
    if q & 1:
        total += pc * rc
    if r & 1:
        total += pc * q
    if p & 1:
        total += q * r
    return total
