import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seq2seq.errors import DimensionError
from seq2seq.numerics import (
    Matrix2D,
    elementwise,
    global_norm,
    log_softmax_rows,
    matmul,
    matmul_nt,
    matmul_tn,
    sigmoid,
)


def rand_matrix(rows, cols, seed, lo=-3.0, hi=3.0, precision="double"):
    rng = random.Random(seed)
    return Matrix2D(rows, cols, [rng.uniform(lo, hi) for _ in range(rows * cols)],
                    precision)


class TestMatmul:
    def test_identity(self):
        a = Matrix2D.from_rows([[1, 2], [3, 4]])
        eye = Matrix2D.from_rows([[1, 0], [0, 1]])
        assert matmul(eye, a).tolist() == a.tolist()
        assert matmul(a, eye).tolist() == a.tolist()

    def test_direct_arithmetic(self):
        a = Matrix2D.from_rows([[1, 2], [3, 4]])
        b = Matrix2D.from_rows([[5, 6], [7, 8]])
        assert matmul(a, b).tolist() == [[19, 22], [43, 50]]

    def test_dimension_mismatch_names_shapes(self):
        a = Matrix2D.zeros(2, 3)
        b = Matrix2D.zeros(2, 2)
        with pytest.raises(DimensionError, match=r"\(2x3\).*\(2x2\)"):
            matmul(a, b)

    def test_against_numpy(self):
        a = rand_matrix(7, 5, seed=1)
        b = rand_matrix(5, 9, seed=2)
        got = np.array(matmul(a, b).tolist())
        want = np.array(a.tolist()) @ np.array(b.tolist())
        np.testing.assert_allclose(got, want, rtol=1e-13, atol=0)

    def test_transposed_variants_against_numpy(self):
        a = rand_matrix(4, 6, seed=3)
        b = rand_matrix(5, 6, seed=4)
        np.testing.assert_allclose(
            np.array(matmul_nt(a, b).tolist()),
            np.array(a.tolist()) @ np.array(b.tolist()).T, rtol=1e-13, atol=0)
        c = rand_matrix(6, 4, seed=5)
        d = rand_matrix(6, 5, seed=6)
        np.testing.assert_allclose(
            np.array(matmul_tn(c, d).tolist()),
            np.array(c.tolist()).T @ np.array(d.tolist()), rtol=1e-13, atol=0)

    def test_deterministic_bitwise(self):
        a = rand_matrix(6, 6, seed=7)
        b = rand_matrix(6, 6, seed=8)
        first = matmul(a, b).data.tobytes()
        for _ in range(3):
            assert matmul(a, b).data.tobytes() == first


class TestElementwise:
    def test_sigmoid_center(self):
        assert sigmoid(Matrix2D.from_rows([[0.0]]))[0, 0] == 0.5

    def test_tanh_center(self):
        assert elementwise("tanh", Matrix2D.from_rows([[0.0]]))[0, 0] == 0.0

    def test_sigmoid_saturation_no_overflow(self):
        m = elementwise("sigmoid", Matrix2D.from_rows([[1000.0, -1000.0]]))
        assert m[0, 0] == 1.0
        assert m[0, 1] == 0.0

    def test_binary_ops(self):
        a = Matrix2D.from_rows([[1, 2], [3, 4]])
        b = Matrix2D.from_rows([[10, 20], [30, 40]])
        assert elementwise("add", a, b).tolist() == [[11, 22], [33, 44]]
        assert elementwise("mul", a, b).tolist() == [[10, 40], [90, 160]]

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            elementwise("add", Matrix2D.zeros(2, 2), Matrix2D.zeros(2, 3))

    @given(st.lists(st.floats(-30, 30), min_size=1, max_size=40))
    def test_sigmoid_range_open_interval(self, values):
        out = sigmoid(Matrix2D(1, len(values), values))
        assert all(0.0 < v < 1.0 for v in out.data)

    @given(st.lists(st.floats(-18, 18), min_size=1, max_size=40))
    def test_tanh_range(self, values):
        # float64 tanh saturates to exactly +/-1 beyond |x| ~ 19
        out = elementwise("tanh", Matrix2D(1, len(values), values))
        assert all(-1.0 < v < 1.0 for v in out.data)


class TestLogSoftmax:
    def test_uniform_row(self):
        out = log_softmax_rows(Matrix2D.from_rows([[1.0, 1.0, 1.0, 1.0]]))
        for v in out.data:
            assert abs(v - math.log(0.25)) < 1e-15

    def test_analytic_two_entry_row(self):
        out = log_softmax_rows(Matrix2D.from_rows([[0.0, math.log(2.0)]]))
        assert abs(out[0, 0] - math.log(1 / 3)) < 1e-15
        assert abs(out[0, 1] - math.log(2 / 3)) < 1e-15

    def test_huge_logits_finite(self):
        out = log_softmax_rows(Matrix2D.from_rows([[1000.0, 1000.0]]))
        assert abs(out[0, 0] - math.log(0.5)) < 1e-15
        assert out.all_finite()

    @given(st.lists(st.floats(-50, 50), min_size=1, max_size=20),
           st.floats(-100, 100))
    def test_shift_invariance(self, row, shift):
        base = log_softmax_rows(Matrix2D(1, len(row), row))
        shifted = log_softmax_rows(Matrix2D(1, len(row), [v + shift for v in row]))
        for x, y in zip(base.data, shifted.data):
            assert abs(x - y) < 1e-12

    @given(st.integers(2, 6), st.integers(1, 50))
    @settings(max_examples=25)
    def test_rows_sum_to_one(self, cols, seed):
        m = rand_matrix(3, cols, seed, -10, 10)
        out = log_softmax_rows(m)
        for i in range(out.rows):
            assert abs(math.fsum(math.exp(v) for v in out.row(i)) - 1.0) < 1e-12

    def test_single_precision_tolerance(self):
        m = rand_matrix(2, 8, seed=9, precision="single")
        out = log_softmax_rows(m)
        for i in range(out.rows):
            assert abs(math.fsum(math.exp(v) for v in out.row(i)) - 1.0) < 1e-5


class TestGlobalNorm:
    def test_three_four_five(self):
        assert global_norm([Matrix2D.from_rows([[3.0], [4.0]])]) == 5.0

    def test_zeros(self):
        assert global_norm([Matrix2D.zeros(2, 3)]) == 0.0

    def test_concatenation_semantics(self):
        split = global_norm([Matrix2D.from_rows([[3.0]]), Matrix2D.from_rows([[4.0]])])
        assert split == 5.0

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            global_norm([])


class TestMatrix2D:
    def test_value_count_checked(self):
        with pytest.raises(DimensionError):
            Matrix2D(2, 2, [1.0, 2.0, 3.0])

    def test_single_precision_storage_rounds(self):
        m = Matrix2D(1, 1, [0.1], precision="single")
        assert m[0, 0] != 0.1  # float32 cannot represent 0.1 exactly
        assert abs(m[0, 0] - 0.1) < 1e-8

    def test_mixed_precision_rejected(self):
        a = Matrix2D.zeros(2, 2, "double")
        b = Matrix2D.zeros(2, 2, "single")
        with pytest.raises(ValueError):
            matmul(a, b)
