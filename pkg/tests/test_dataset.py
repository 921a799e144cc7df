import math

import numpy as np
import pytest

from coax.dataset import (
    Dataset,
    DatasetError,
    column_stats,
    kl_uniform_divergence,
    load_csv,
    sample,
)


def quantile_oracle(values, level):
    """Independent linear-interpolation quantile: sort, index h=(n-1)*level."""
    s = sorted(values)
    h = (len(s) - 1) * level
    lo = math.floor(h)
    hi = math.ceil(h)
    return s[lo] + (h - lo) * (s[hi] - s[lo])


class TestLoadCsv:
    def test_basic_two_columns(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("x,y\n1,2\n3,4\n")
        d = load_csv(p, dims=["x", "y"])
        assert d.n_rows == 2
        assert d.n_dims == 2
        assert d.names == ("x", "y")
        np.testing.assert_array_equal(d.columns[0], [1.0, 3.0])

    def test_projection_single_column(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("x,y\n1,2\n3,4\n")
        d = load_csv(p, dims=["x"])
        assert (d.n_rows, d.n_dims) == (2, 1)

    def test_selection_by_index(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("x,y\n1,2\n3,4\n")
        d = load_csv(p, dims=[1])
        np.testing.assert_array_equal(d.columns[0], [2.0, 4.0])
        assert d.names == ("y",)

    def test_header_only_is_error(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("a,b\n")
        with pytest.raises(DatasetError):
            load_csv(p, dims=["a", "b"])

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetError):
            load_csv(tmp_path / "absent.csv")

    def test_zero_selected_columns(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("x,y\n1,2\n")
        with pytest.raises(DatasetError):
            load_csv(p, dims=[])

    def test_unknown_column_name(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("x,y\n1,2\n")
        with pytest.raises(DatasetError):
            load_csv(p, dims=["zz"])

    def test_dirty_rows_dropped_and_counted(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("x,y\n1,2\noops,3\n4,inf\n5,6\n7,\n")
        d = load_csv(p, dims=["x", "y"])
        assert d.n_rows == 2
        assert d.dropped_rows == 3
        np.testing.assert_array_equal(d.columns[0], [1.0, 5.0])

    def test_dirty_value_in_unselected_column_kept(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("x,y\n1,bad\n2,7\n")
        d = load_csv(p, dims=["x"])
        assert d.n_rows == 2
        assert d.dropped_rows == 0


class TestSample:
    def test_deterministic_for_seed(self):
        d = Dataset.from_matrix(np.random.default_rng(0).uniform(size=(1000, 2)))
        a = sample(d, 100, seed=7)
        b = sample(d, 100, seed=7)
        assert a.n_rows == 100
        np.testing.assert_array_equal(a.matrix(), b.matrix())

    def test_saturates_at_dataset_size(self):
        d = Dataset.from_matrix(np.arange(100, dtype=float).reshape(50, 2))
        s = sample(d, 100, seed=7)
        assert s.n_rows == 50

    def test_different_seeds_differ(self):
        d = Dataset.from_matrix(np.random.default_rng(0).uniform(size=(10000, 1)))
        a = sample(d, 100, seed=7)
        b = sample(d, 100, seed=8)
        assert not np.array_equal(a.columns[0], b.columns[0])

    def test_rejects_zero(self):
        d = Dataset.from_matrix(np.zeros((5, 1)))
        with pytest.raises(DatasetError):
            sample(d, 0, seed=1)


class TestColumnStats:
    def test_quantiles_match_oracle(self):
        d = Dataset.from_matrix(np.arange(100, dtype=float).reshape(-1, 1))
        st = column_stats(d, 0, q=3)
        expected = [quantile_oracle(range(100), lvl) for lvl in (0.25, 0.5, 0.75)]
        np.testing.assert_allclose(st.quantiles, expected)
        np.testing.assert_allclose(st.quantiles, [24.75, 49.5, 74.25])

    def test_constant_column(self):
        d = Dataset.from_matrix(np.full((3, 1), 5.0))
        st = column_stats(d, 0, q=2)
        assert st.quantiles == (5.0, 5.0)

    def test_two_point_midpoint(self):
        d = Dataset.from_matrix(np.array([[0.0], [100.0]]))
        st = column_stats(d, 0, q=1)
        assert st.quantiles == (50.0,)

    def test_extrema_match_linear_scan(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            col = rng.normal(size=rng.integers(2, 500))
            d = Dataset.from_matrix(col.reshape(-1, 1))
            st = column_stats(d, 0, q=4)
            assert st.minimum == min(col)
            assert st.maximum == max(col)
            assert st.minimum <= min(st.quantiles)
            assert max(st.quantiles) <= st.maximum
            assert list(st.quantiles) == sorted(st.quantiles)

    def test_bad_dim(self):
        d = Dataset.from_matrix(np.zeros((3, 1)))
        with pytest.raises(DatasetError):
            column_stats(d, 1, q=1)


class TestKlUniformDivergence:
    def test_all_unique_is_zero(self):
        d = Dataset.from_matrix(np.array([[1.0], [2.0], [3.0], [4.0]]))
        assert kl_uniform_divergence(d, 0) == 0.0

    def test_two_value_skew(self):
        # P = (3/4, 1/4) against (1/2, 1/2), natural log.
        d = Dataset.from_matrix(np.array([[1.0], [1.0], [1.0], [2.0]]))
        expected = 0.75 * math.log(1.5) + 0.25 * math.log(0.5)
        assert kl_uniform_divergence(d, 0) == pytest.approx(expected)
        assert kl_uniform_divergence(d, 0) == pytest.approx(0.1308, abs=1e-4)

    def test_single_unique_value(self):
        d = Dataset.from_matrix(np.full((4, 1), 7.0))
        assert kl_uniform_divergence(d, 0) == 0.0

    def test_nonnegative_on_random_columns(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            vals = rng.integers(0, 10, size=rng.integers(1, 40)).astype(float)
            d = Dataset.from_matrix(vals.reshape(-1, 1))
            assert kl_uniform_divergence(d, 0) >= 0.0

    def test_equifrequent_is_exactly_zero(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            uniques = rng.choice(1000, size=rng.integers(1, 20), replace=False).astype(float)
            reps = rng.integers(1, 6)
            d = Dataset.from_matrix(np.repeat(uniques, reps).reshape(-1, 1))
            assert kl_uniform_divergence(d, 0) == pytest.approx(0.0, abs=1e-12)


class TestDatasetInvariants:
    def test_rejects_ragged_columns(self):
        with pytest.raises(DatasetError):
            Dataset(columns=(np.zeros(2), np.zeros(3)), names=("a", "b"))

    def test_rejects_non_finite(self):
        with pytest.raises(DatasetError):
            Dataset(columns=(np.array([1.0, np.nan]),), names=("a",))

    def test_columns_are_read_only(self):
        d = Dataset.from_matrix(np.zeros((2, 1)))
        with pytest.raises(ValueError):
            d.columns[0][0] = 1.0
