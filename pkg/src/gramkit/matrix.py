"""Dense row-major matrices, zero-copy quadrant views, packed symmetric
storage, cache-oblivious transpose, and the matrix file formats."""

from __future__ import annotations

import struct
from typing import NamedTuple

import numpy as np

from . import kernels

# A 16x16 float64 tile stays inside one typical L1 way.
TRANSPOSE_TILE = 16


class DenseMatrix:
    """Row-major float64 matrix owning its storage.

    Element (i, j) lives at flat offset i * cols + j.
    """

    __slots__ = ("_a",)

    def __init__(self, array):
        # Adopts the given array when it is already contiguous float64.
        a = np.asarray(array, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError(f"expected 2-D data, got {a.ndim}-D")
        if not a.flags.c_contiguous or not a.flags.writeable:
            a = a.copy(order="C")
        self._a = a

    @classmethod
    def zeros(cls, rows, cols):
        return cls(np.zeros((rows, cols)))

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n))

    @property
    def rows(self):
        return self._a.shape[0]

    @property
    def cols(self):
        return self._a.shape[1]

    @property
    def shape(self):
        return self._a.shape

    @property
    def array(self):
        return self._a

    @property
    def data(self):
        """Flat row-major storage, length rows * cols (zero copy)."""
        return self._a.reshape(-1)

    def view(self, row_off=0, col_off=0, rows=None, cols=None):
        return MatrixView(self, row_off, col_off, rows, cols)

    def __getitem__(self, ij):
        i, j = ij
        return float(self._a[i, j])

    def __repr__(self):
        return f"DenseMatrix({self.rows}x{self.cols})"


class MatrixView:
    """Read-only rectangular window into a DenseMatrix (zero copy)."""

    __slots__ = ("base", "row_off", "col_off", "rows", "cols", "row_stride", "_a")

    def __init__(self, base, row_off=0, col_off=0, rows=None, cols=None):
        if rows is None:
            rows = base.rows - row_off
        if cols is None:
            cols = base.cols - col_off
        if min(row_off, col_off, rows, cols) < 0:
            raise ValueError("negative view bounds")
        if row_off + rows > base.rows or col_off + cols > base.cols:
            raise ValueError(
                f"view {rows}x{cols} at ({row_off},{col_off}) exceeds "
                f"base {base.rows}x{base.cols}"
            )
        self.base = base
        self.row_off = row_off
        self.col_off = col_off
        self.rows = rows
        self.cols = cols
        self.row_stride = base.cols
        a = base.array[row_off:row_off + rows, col_off:col_off + cols]
        a.flags.writeable = False
        self._a = a

    @property
    def shape(self):
        return (self.rows, self.cols)

    @property
    def array(self):
        return self._a

    def materialize(self):
        return DenseMatrix(self._a.copy())

    def __getitem__(self, ij):
        i, j = ij
        return float(self._a[i, j])

    def __repr__(self):
        return (f"MatrixView({self.rows}x{self.cols} at "
                f"({self.row_off},{self.col_off}) of {self.base!r})")


def as_array(x) -> np.ndarray:
    """2-D float64 array behind a DenseMatrix / MatrixView / array-like."""
    if isinstance(x, (DenseMatrix, MatrixView)):
        return x.array
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected 2-D data, got {a.ndim}-D")
    return a


def _as_view(x) -> MatrixView:
    if isinstance(x, MatrixView):
        return x
    if isinstance(x, DenseMatrix):
        return x.view()
    return DenseMatrix(x).view()


class SplitDims(NamedTuple):
    m1: int
    m2: int
    n1: int
    n2: int


def split_dims(m, n) -> SplitDims:
    """Ceil/floor halves: the (1,1) block gets the larger share."""
    return SplitDims((m + 1) // 2, m // 2, (n + 1) // 2, n // 2)


def split_quadrants(v):
    """Quadrant views (A11, A12, A21, A22) tiling v exactly."""
    v = _as_view(v)
    if v.rows < 1 or v.cols < 1:
        raise ValueError("cannot split an empty matrix")
    d = split_dims(v.rows, v.cols)
    b, r, c = v.base, v.row_off, v.col_off
    a11 = MatrixView(b, r, c, d.m1, d.n1)
    a12 = MatrixView(b, r, c + d.n1, d.m1, d.n2)
    a21 = MatrixView(b, r + d.m1, c, d.m2, d.n1)
    a22 = MatrixView(b, r + d.m1, c + d.n1, d.m2, d.n2)
    return d, (a11, a12, a21, a22)


def transpose_array(src) -> np.ndarray:
    """Out-of-place transpose by recursive halving of the larger dimension."""
    src = np.asarray(src, dtype=np.float64)
    rows, cols = src.shape
    dst = np.empty((cols, rows))
    _transpose_rec(dst, src, 0, 0, rows, cols)
    return dst


def _transpose_rec(dst, src, r0, c0, rows, cols):
    if rows <= TRANSPOSE_TILE and cols <= TRANSPOSE_TILE:
        kernels.transpose_tile(dst, src, r0, c0, rows, cols)
    elif rows >= cols:
        half = rows // 2
        _transpose_rec(dst, src, r0, c0, half, cols)
        _transpose_rec(dst, src, r0 + half, c0, rows - half, cols)
    else:
        half = cols // 2
        _transpose_rec(dst, src, r0, c0, rows, half)
        _transpose_rec(dst, src, r0, c0 + half, rows, cols - half)


def transpose(x) -> DenseMatrix:
    return DenseMatrix(transpose_array(as_array(x)))


def add(x, y) -> DenseMatrix:
    a, b = as_array(x), as_array(y)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return DenseMatrix(a + b)


def sub(x, y) -> DenseMatrix:
    a, b = as_array(x), as_array(y)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return DenseMatrix(a - b)


class PackedLowerTriangular:
    """Lower triangle of a symmetric n x n matrix in n(n+1)/2 floats.

    Entry (i, j) with i >= j sits at offset i(i+1)/2 + j; reading (i, j)
    with i < j falls through to (j, i).
    """

    __slots__ = ("n", "data")

    def __init__(self, n, data):
        data = np.asarray(data, dtype=np.float64).reshape(-1)
        if data.size != n * (n + 1) // 2:
            raise ValueError(f"packed size {data.size} does not match n={n}")
        self.n = n
        self.data = data

    @classmethod
    def zeros(cls, n):
        return cls(n, np.zeros(n * (n + 1) // 2))

    @classmethod
    def from_dense(cls, x):
        a = as_array(x)
        n = a.shape[0]
        if a.shape != (n, n):
            raise ValueError("square matrix required")
        return cls(n, a[np.tril_indices(n)])

    def get(self, i, j) -> float:
        if i < j:
            i, j = j, i
        if not 0 <= j <= i < self.n:
            raise IndexError(f"({i},{j}) out of range for n={self.n}")
        return float(self.data[i * (i + 1) // 2 + j])

    def __getitem__(self, ij):
        return self.get(*ij)

    def unpack(self) -> DenseMatrix:
        """Full symmetric matrix (upper triangle mirrored from the lower)."""
        out = np.zeros((self.n, self.n))
        il = np.tril_indices(self.n)
        out[il] = self.data
        out[(il[1], il[0])] = self.data
        return DenseMatrix(out)

    def __repr__(self):
        return f"PackedLowerTriangular(n={self.n})"


def merge_packed(c11, c21, c22, n1, n2) -> np.ndarray:
    """Packed array of order n1+n2 from packed c11, dense c21, packed c22."""
    n = n1 + n2
    out = np.empty(n * (n + 1) // 2)
    pos = n1 * (n1 + 1) // 2
    out[:pos] = c11
    for i in range(n2):
        out[pos:pos + n1] = c21[i]
        pos += n1
        start = i * (i + 1) // 2
        out[pos:pos + i + 1] = c22[start:start + i + 1]
        pos += i + 1
    return out


def pack_lower(c11, c21, c22) -> PackedLowerTriangular:
    """Assemble packed C from its diagonal blocks and the lower off-diagonal
    block; the upper off-diagonal block is never materialized."""
    c21a = as_array(c21)
    n1, n2 = c11.n, c22.n
    if c21a.shape != (n2, n1):
        raise ValueError(f"off-diagonal block is {c21a.shape}, expected ({n2},{n1})")
    if n1 - n2 not in (0, 1):
        raise ValueError(f"blocks n1={n1}, n2={n2} do not form a ceil/floor split")
    return PackedLowerTriangular(n1 + n2, merge_packed(c11.data, c21a, c22.data, n1, n2))


def write_text_matrix(x, path):
    """Text format: 'm n' header line, then m rows of n floats."""
    a = as_array(x)
    with open(path, "w") as f:
        f.write(f"{a.shape[0]} {a.shape[1]}\n")
        np.savetxt(f, a, fmt="%.17g")


def read_text_matrix(path) -> DenseMatrix:
    with open(path) as f:
        header = f.readline().split()
        if len(header) != 2:
            raise ValueError(f"bad matrix header in {path!r}")
        m, n = int(header[0]), int(header[1])
        data = np.loadtxt(f, ndmin=2)
    if data.shape != (m, n):
        raise ValueError(f"{path!r}: header says {m}x{n}, data is {data.shape}")
    return DenseMatrix(data)


def write_binary_matrix(x, path):
    """Binary format: little-endian u64 m, n, then m*n little-endian float64."""
    a = as_array(x)
    with open(path, "wb") as f:
        f.write(struct.pack("<QQ", *a.shape))
        f.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def read_binary_matrix(path) -> DenseMatrix:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 16:
        raise ValueError(f"{path!r}: truncated binary matrix")
    m, n = struct.unpack_from("<QQ", raw)
    if len(raw) != 16 + 8 * m * n:
        raise ValueError(f"{path!r}: expected {m}x{n} payload, got {len(raw) - 16} bytes")
    a = np.frombuffer(raw, dtype="<f8", offset=16).reshape(m, n)
    return DenseMatrix(a.copy())


def load_matrix(path) -> DenseMatrix:
    """Load either format; the u64 binary header always contains NUL bytes,
    the text format never does."""
    with open(path, "rb") as f:
        head = f.read(16)
    if b"\x00" in head:
        return read_binary_matrix(path)
    return read_text_matrix(path)
