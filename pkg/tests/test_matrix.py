import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gramkit.matrix import (DenseMatrix, MatrixView, PackedLowerTriangular,
                            add, load_matrix, pack_lower, read_binary_matrix,
                            read_text_matrix, split_dims, split_quadrants, sub,
                            transpose, write_binary_matrix, write_text_matrix)


def rand(m, n, seed=0):
    return DenseMatrix(np.random.default_rng(seed).uniform(-1, 1, (m, n)))


class TestDenseMatrix:
    def test_flat_layout(self):
        m = DenseMatrix([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
        assert m.rows == 2 and m.cols == 3
        assert m.data.shape == (6,)
        for i in range(2):
            for j in range(3):
                assert m.data[i * 3 + j] == m[i, j]

    def test_rejects_non_2d(self):
        with pytest.raises(ValueError):
            DenseMatrix([1.0, 2.0])


class TestMatrixView:
    def test_reads_through_to_base(self):
        base = rand(6, 5)
        v = base.view(1, 2, 4, 3)
        assert v.row_stride == base.cols
        for i in range(4):
            for j in range(3):
                assert v[i, j] == base[1 + i, 2 + j]

    def test_bounds_checked(self):
        base = rand(4, 4)
        with pytest.raises(ValueError):
            MatrixView(base, 2, 2, 3, 1)
        with pytest.raises(ValueError):
            MatrixView(base, -1, 0)

    def test_views_read_only(self):
        v = rand(4, 4).view()
        with pytest.raises(ValueError):
            v.array[0, 0] = 1.0


class TestSplit:
    @pytest.mark.parametrize("m,n,expected", [
        (5, 5, (3, 2, 3, 2)),
        (4, 4, (2, 2, 2, 2)),
        (5, 3, (3, 2, 2, 1)),
    ])
    def test_ceil_floor_dims(self, m, n, expected):
        assert tuple(split_dims(m, n)) == expected

    @pytest.mark.parametrize("m,n", [(1, 1), (2, 3), (7, 7), (9, 4), (16, 16)])
    def test_quadrants_tile_exactly(self, m, n):
        base = rand(m, n, seed=m * n)
        d, (a11, a12, a21, a22) = split_quadrants(base.view())
        cover = np.zeros((m, n), dtype=int)
        for v in (a11, a12, a21, a22):
            cover[v.row_off:v.row_off + v.rows, v.col_off:v.col_off + v.cols] += 1
        assert (cover == 1).all()
        assert np.array_equal(a11.array, base.array[:d.m1, :d.n1])
        assert np.array_equal(a22.array, base.array[d.m1:, d.n1:])


class TestTranspose:
    def test_small_example(self):
        t = transpose(DenseMatrix([[1.0, 2, 3], [4, 5, 6]]))
        assert np.array_equal(t.array, [[1, 4], [2, 5], [3, 6]])

    def test_identity(self):
        eye = DenseMatrix.identity(4)
        assert np.array_equal(transpose(eye).array, eye.array)

    def test_matches_naive_bitwise(self):
        a = rand(33, 17, seed=5)
        naive = np.empty((17, 33))
        for i in range(33):
            for j in range(17):
                naive[j, i] = a[i, j]
        assert np.array_equal(transpose(a).array, naive)

    def test_full_sweep_vs_numpy(self):
        rng = np.random.default_rng(6)
        for m in range(1, 41):
            for n in range(1, 41):
                a = rng.uniform(-1, 1, (m, n))
                assert np.array_equal(transpose(a).array, a.T)

    @settings(max_examples=40, deadline=None)
    @given(m=st.integers(1, 40), n=st.integers(1, 40), seed=st.integers(0, 2**31))
    def test_double_transpose_is_identity(self, m, n, seed):
        a = rand(m, n, seed)
        v = a.view(m // 3, n // 3)
        back = transpose(transpose(v))
        assert np.array_equal(back.array, v.array)


class TestAddSub:
    def test_examples(self):
        x = rand(3, 4, seed=1)
        zero = DenseMatrix.zeros(3, 4)
        assert np.array_equal(add(x, zero).array, x.array)
        assert np.array_equal(sub(x, x).array, zero.array)
        assert np.array_equal(add([[1.0, 2]], [[3.0, 4]]).array, [[4, 6]])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            add(rand(2, 2), rand(2, 3))
        with pytest.raises(ValueError):
            sub(rand(2, 2), rand(3, 2))


class TestPacked:
    def test_layout_formula(self):
        c11 = PackedLowerTriangular(1, [10.0])
        c22 = PackedLowerTriangular(1, [20.0])
        packed = pack_lower(c11, [[14.0]], c22)
        assert np.array_equal(packed.data, [10.0, 14.0, 20.0])

    def test_degenerate_single_block(self):
        packed = pack_lower(PackedLowerTriangular(1, [7.0]),
                            np.zeros((0, 1)), PackedLowerTriangular(0, []))
        assert np.array_equal(packed.data, [7.0])

    def test_block_dims_validated(self):
        c11 = PackedLowerTriangular(2, [1.0, 2, 3])
        c22 = PackedLowerTriangular(2, [4.0, 5, 6])
        with pytest.raises(ValueError):
            pack_lower(c11, np.zeros((3, 2)), c22)
        with pytest.raises(ValueError):
            pack_lower(PackedLowerTriangular(3, np.zeros(6)), np.zeros((1, 3)),
                       PackedLowerTriangular(1, [1.0]))

    def test_symmetric_read(self):
        p = PackedLowerTriangular.from_dense([[1.0, 0], [5.0, 2]])
        assert p.get(0, 1) == p.get(1, 0) == 5.0
        assert p[0, 0] == 1.0

    @settings(max_examples=30, deadline=None)
    @given(n=st.integers(1, 64), seed=st.integers(0, 2**31))
    def test_pack_unpack_roundtrip_bitwise(self, n, seed):
        data = np.random.default_rng(seed).uniform(-1, 1, n * (n + 1) // 2)
        p = PackedLowerTriangular(n, data)
        full = p.unpack()
        again = PackedLowerTriangular.from_dense(full)
        assert np.array_equal(again.data, data)
        assert np.array_equal(full.array, full.array.T)

    def test_size_validated(self):
        with pytest.raises(ValueError):
            PackedLowerTriangular(3, [1.0, 2.0])


class TestFileFormats:
    def test_text_roundtrip(self, tmp_path):
        a = rand(7, 3, seed=9)
        path = tmp_path / "a.txt"
        write_text_matrix(a, path)
        first = path.read_text().splitlines()[0]
        assert first == "7 3"
        back = read_text_matrix(path)
        assert np.array_equal(back.array, a.array)

    def test_binary_roundtrip(self, tmp_path):
        a = rand(5, 8, seed=10)
        path = tmp_path / "a.bin"
        write_binary_matrix(a, path)
        back = read_binary_matrix(path)
        assert np.array_equal(back.array, a.array)

    def test_load_sniffs_format(self, tmp_path):
        a = rand(4, 4, seed=11)
        tpath, bpath = tmp_path / "t.mat", tmp_path / "b.mat"
        write_text_matrix(a, tpath)
        write_binary_matrix(a, bpath)
        assert np.array_equal(load_matrix(tpath).array, a.array)
        assert np.array_equal(load_matrix(bpath).array, a.array)

    def test_corrupt_binary_rejected(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"\x00" * 20)
        with pytest.raises(ValueError):
            load_matrix(path)
