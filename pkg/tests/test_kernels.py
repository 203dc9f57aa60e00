"""Backend kernels: both implementations must match a literal triple loop
bit for bit (that is the whole contract that lets them be swapped)."""

import numpy as np
import pytest

from gramkit import kernels
from gramkit.kernels import _pykernels

BACKENDS = [pytest.param(kernels._pykernels, id="py")]
if kernels._ckernels is not None:
    BACKENDS.append(pytest.param(kernels._ckernels, id="c"))


def triple_loop_gram(a):
    m, n = a.shape
    out = np.empty(n * (n + 1) // 2)
    pos = 0
    for i in range(n):
        for j in range(i + 1):
            acc = 0.0
            for k in range(m):
                acc = acc + a[k, i] * a[k, j]
            out[pos] = acc
            pos += 1
    return out


def triple_loop_matmul(a, b):
    p, q = a.shape
    r = b.shape[1]
    out = np.empty((p, r))
    for i in range(p):
        for j in range(r):
            acc = 0.0
            for k in range(q):
                acc = acc + a[i, k] * b[k, j]
            out[i, j] = acc
    return out


@pytest.mark.parametrize("mod", BACKENDS)
@pytest.mark.parametrize("m,n", [(1, 1), (2, 3), (5, 5), (8, 4), (17, 9)])
def test_gram_block_matches_triple_loop_bitwise(mod, m, n):
    a = np.random.default_rng(m * 100 + n).uniform(-1, 1, (m, n))
    assert np.array_equal(mod.gram_block(a), triple_loop_gram(a))


@pytest.mark.parametrize("mod", BACKENDS)
@pytest.mark.parametrize("p,q,r", [(1, 1, 1), (2, 3, 4), (5, 5, 5), (7, 2, 6)])
def test_matmul_block_matches_triple_loop_bitwise(mod, p, q, r):
    rng = np.random.default_rng(p * 100 + q * 10 + r)
    a = rng.uniform(-1, 1, (p, q))
    b = rng.uniform(-1, 1, (q, r))
    assert np.array_equal(mod.matmul_block(a, b), triple_loop_matmul(a, b))


@pytest.mark.skipif(kernels._ckernels is None, reason="compiled backend not built")
def test_backends_agree_bitwise():
    rng = np.random.default_rng(0)
    for m, n in [(3, 2), (32, 32), (40, 17)]:
        a = rng.uniform(-1, 1, (m, n))
        assert np.array_equal(kernels._ckernels.gram_block(a),
                              _pykernels.gram_block(a))
        b = rng.uniform(-1, 1, (n, m))
        assert np.array_equal(kernels._ckernels.matmul_block(a, b),
                              _pykernels.matmul_block(a, b))


@pytest.mark.parametrize("mod", BACKENDS)
def test_transpose_tile(mod):
    rng = np.random.default_rng(1)
    src = rng.uniform(-1, 1, (10, 7))
    dst = np.zeros((7, 10))
    mod.transpose_tile(dst, src, 2, 1, 5, 4)
    assert np.array_equal(dst[1:5, 2:7], src[2:7, 1:5].T)


def test_strided_inputs_accepted():
    rng = np.random.default_rng(2)
    big = rng.uniform(-1, 1, (20, 20))
    view = big[3:11, 2:9]  # non-contiguous
    assert np.array_equal(kernels.gram_block(view), triple_loop_gram(view))


def test_backend_selection_roundtrip():
    active = kernels.backend_name()
    assert active in ("c", "py")
    try:
        kernels.use_backend("py")
        assert kernels.backend_name() == "py"
        assert kernels.gram_block is _pykernels.gram_block
    finally:
        kernels.use_backend("auto")
    with pytest.raises(ValueError):
        kernels.use_backend("fortran")
