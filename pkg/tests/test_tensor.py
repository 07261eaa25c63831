import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tensorcast import (
    Tensor3,
    frobenius_norm,
    khatri_rao,
    kronecker,
    matricize,
    n_mode_product,
    refold,
)
from tensorcast.tensor import dump_sparse_csv, load_sparse_csv


def random_tensor(rng, dims):
    return Tensor3(rng.uniform(size=dims))


dims_strategy = st.tuples(
    st.integers(min_value=1, max_value=5),
    st.integers(min_value=1, max_value=5),
    st.integers(min_value=1, max_value=5),
)


class TestTensor3:
    def test_rejects_non_3d(self):
        with pytest.raises(ValueError):
            Tensor3(np.zeros((2, 2)))

    def test_rejects_non_finite(self):
        data = np.zeros((2, 2, 2))
        data[0, 0, 0] = np.nan
        with pytest.raises(ValueError):
            Tensor3(data)

    def test_require_nonnegative(self):
        data = np.zeros((2, 2, 2))
        data[1, 1, 1] = -1.0
        t = Tensor3(data)
        with pytest.raises(ValueError):
            t.require_nonnegative()

    def test_immutability(self):
        t = Tensor3(np.ones((2, 2, 2)))
        with pytest.raises(ValueError):
            t.data[0, 0, 0] = 5.0


class TestFrobeniusNorm:
    def test_zero_tensor(self):
        assert frobenius_norm(Tensor3.zeros((2, 2, 2))) == 0.0

    def test_all_ones(self):
        assert frobenius_norm(Tensor3(np.ones((2, 2, 2)))) == pytest.approx(math.sqrt(8), rel=1e-15)

    def test_singleton(self):
        assert frobenius_norm(Tensor3(np.full((1, 1, 1), 3.0))) == 3.0

    def test_equals_unfolding_norm_every_mode(self):
        t = random_tensor(np.random.default_rng(0), (3, 4, 5))
        n2 = frobenius_norm(t) ** 2
        for mode in (1, 2, 3):
            assert np.sum(matricize(t, mode) ** 2) == pytest.approx(n2, rel=1e-12)


class TestMatricize:
    def test_hand_derived_2x2x2(self):
        # x[i,j,k] = (i+1) + 2j + 4k gives entries 1..8; the mode-1 unfolding
        # was enumerated by hand for all eight entries.
        data = np.empty((2, 2, 2))
        for i in range(2):
            for j in range(2):
                for k in range(2):
                    data[i, j, k] = (i + 1) + 2 * j + 4 * k
        t = Tensor3(data)
        np.testing.assert_array_equal(matricize(t, 1), [[1, 3, 5, 7], [2, 4, 6, 8]])

    def test_shapes(self):
        t = random_tensor(np.random.default_rng(1), (3, 4, 5))
        assert matricize(t, 1).shape == (3, 20)
        assert matricize(t, 2).shape == (4, 15)
        assert matricize(t, 3).shape == (5, 12)

    def test_degenerate_time_column(self):
        vals = np.arange(1.0, 5.0).reshape(1, 1, 4)
        t = Tensor3(vals)
        np.testing.assert_array_equal(matricize(t, 3), [[1], [2], [3], [4]])

    def test_invalid_mode(self):
        t = Tensor3(np.ones((2, 2, 2)))
        with pytest.raises(ValueError):
            matricize(t, 0)
        with pytest.raises(ValueError):
            matricize(t, 4)

    @settings(max_examples=25, deadline=None)
    @given(dims=dims_strategy, mode=st.integers(min_value=1, max_value=3), seed=st.integers(0, 2**31))
    def test_round_trip(self, dims, mode, seed):
        t = random_tensor(np.random.default_rng(seed), dims)
        back = refold(matricize(t, mode), mode, dims)
        assert back == t  # bit-exact


class TestNModeProduct:
    def test_identity(self):
        t = random_tensor(np.random.default_rng(2), (3, 4, 5))
        for mode, size in zip((1, 2, 3), (3, 4, 5)):
            out = n_mode_product(t, np.eye(size), mode)
            np.testing.assert_array_equal(out.data, t.data)

    def test_ones_contraction(self):
        t = Tensor3(np.ones((2, 2, 2)))
        out = n_mode_product(t, np.ones((1, 2)), 1)
        assert out.dims == (1, 2, 2)
        np.testing.assert_array_equal(out.data, np.full((1, 2, 2), 2.0))

    def test_matches_matricized_route(self):
        # Independent check of the contraction: unfold-multiply-refold.
        rng = np.random.default_rng(3)
        t = random_tensor(rng, (3, 4, 5))
        for mode, size in zip((1, 2, 3), (3, 4, 5)):
            m = rng.uniform(size=(6, size))
            direct = n_mode_product(t, m, mode)
            via_unfold = m @ matricize(t, mode)
            np.testing.assert_allclose(matricize(direct, mode), via_unfold, rtol=1e-13)

    def test_dimension_mismatch(self):
        t = Tensor3(np.ones((2, 3, 4)))
        with pytest.raises(ValueError):
            n_mode_product(t, np.ones((2, 2)), 2)


class TestKronecker:
    def test_scalar_one_identity(self):
        b = np.array([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(kronecker(np.array([[1.0]]), b), b)

    def test_hand_expansion(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        b = np.array([[0.0, 1.0], [1.0, 0.0]])
        want = [[0, 1, 0, 2], [1, 0, 2, 0], [0, 3, 0, 4], [3, 0, 4, 0]]
        np.testing.assert_array_equal(kronecker(a, b), want)

    def test_column_vectors(self):
        a = np.array([[1.0], [0.0]])
        b = np.array([[0.0], [1.0]])
        np.testing.assert_array_equal(kronecker(a, b), [[0.0], [1.0], [0.0], [0.0]])


class TestKhatriRao:
    def test_hand_expansion(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        b = np.array([[0.0, 1.0], [1.0, 0.0]])
        want = [[0, 2], [1, 0], [0, 4], [3, 0]]
        np.testing.assert_array_equal(khatri_rao(a, b), want)

    def test_single_column_equals_kron(self):
        rng = np.random.default_rng(4)
        a = rng.uniform(size=(3, 1))
        b = rng.uniform(size=(4, 1))
        np.testing.assert_array_equal(khatri_rao(a, b), kronecker(a, b))

    def test_zero_column_annihilates(self):
        rng = np.random.default_rng(5)
        a = rng.uniform(size=(3, 2))
        a[:, 1] = 0.0
        b = rng.uniform(size=(4, 2))
        assert (khatri_rao(a, b)[:, 1] == 0.0).all()

    def test_mismatched_columns(self):
        with pytest.raises(ValueError):
            khatri_rao(np.ones((2, 2)), np.ones((2, 3)))

    @settings(max_examples=20, deadline=None)
    @given(
        rows_a=st.integers(1, 4),
        rows_b=st.integers(1, 4),
        cols=st.integers(1, 4),
        seed=st.integers(0, 2**31),
    )
    def test_columns_are_per_column_kron(self, rows_a, rows_b, cols, seed):
        rng = np.random.default_rng(seed)
        a = rng.uniform(size=(rows_a, cols))
        b = rng.uniform(size=(rows_b, cols))
        kr = khatri_rao(a, b)
        for r in range(cols):
            col = kronecker(a[:, r : r + 1], b[:, r : r + 1]).ravel()
            np.testing.assert_array_equal(kr[:, r], col)


class TestCommutationIdentity:
    def test_unfold_commutes_with_mode_product(self):
        rng = np.random.default_rng(6)
        for trial in range(10):
            dims = tuple(rng.integers(2, 7, size=3))
            t = random_tensor(rng, dims)
            for mode in (1, 2, 3):
                m = rng.uniform(size=(rng.integers(1, 6), dims[mode - 1]))
                left = matricize(n_mode_product(t, m, mode), mode)
                right = m @ matricize(t, mode)
                np.testing.assert_allclose(left, right, rtol=1e-12, atol=1e-14)


class TestSparseCsv:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(7)
        data = rng.uniform(size=(3, 4, 5))
        data[data < 0.5] = 0.0
        t = Tensor3(data)
        path = tmp_path / "t.csv"
        dump_sparse_csv(t, path, extra_comments=["config=abc seed=1"])
        assert load_sparse_csv(path) == t
