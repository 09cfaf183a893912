"""Panel containers, CSV/JSON ingestion, and lag-matrix algebra."""

import json

import numpy as np
import pytest

from odpc import (
    TimeSeriesPanel,
    build_f_matrix,
    build_lagged_design,
    component_series,
    load_panel,
    load_panel_json,
    save_panel_json,
)


def random_panel(seed, T=20, m=3):
    rng = np.random.default_rng(seed)
    return TimeSeriesPanel(rng.standard_normal((T, m)))


class TestTimeSeriesPanel:
    def test_basic_construction(self):
        panel = TimeSeriesPanel([[1.0, 2.0], [3.0, 4.0]], ["a", "b"])
        assert panel.T == 2 and panel.m == 2
        assert panel.series_names == ("a", "b")

    def test_default_names(self):
        panel = TimeSeriesPanel([[1.0], [2.0]])
        assert panel.series_names == ("V1",)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError, match="non-finite value at row 2, column 1"):
            TimeSeriesPanel([[1.0, 2.0], [np.nan, 4.0]])

    def test_rejects_short_panel(self):
        with pytest.raises(ValueError, match="at least 2 periods"):
            TimeSeriesPanel([[1.0, 2.0]])

    def test_rejects_duplicate_names(self):
        with pytest.raises(ValueError, match="unique"):
            TimeSeriesPanel([[1.0, 2.0], [3.0, 4.0]], ["a", "a"])

    def test_values_immutable(self):
        panel = TimeSeriesPanel([[1.0], [2.0]])
        with pytest.raises(ValueError):
            panel.values[0, 0] = 9.0


class TestLoadPanel:
    def test_csv_with_header(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("a,b\n1,2\n3,4\n5,6\n")
        panel = load_panel(path)
        assert panel.T == 3 and panel.m == 2
        assert panel.series_names == ("a", "b")
        np.testing.assert_array_equal(panel.values, [[1, 2], [3, 4], [5, 6]])

    def test_nan_cell_rejected(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("1,2\nNaN,4\n")
        with pytest.raises(ValueError, match="non-finite value at row 2, column 1"):
            load_panel(path)

    def test_single_column_no_header(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("1\n2\n")
        panel = load_panel(path)
        assert panel.T == 2 and panel.m == 1
        assert panel.series_names == ("V1",)

    def test_ragged_rows_rejected(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("1,2\n3\n")
        with pytest.raises(ValueError, match="ragged"):
            load_panel(path)

    def test_unparseable_cell_rejected(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("x,y\n1,2\n3,oops\n")
        with pytest.raises(ValueError, match="row 2, column 2"):
            load_panel(path)

    def test_explicit_header_flag(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("1,2\n3,4\n5,6\n")
        panel = load_panel(path, header=True)
        assert panel.T == 2
        assert panel.series_names == ("1", "2")

    def test_custom_delimiter(self, tmp_path):
        path = tmp_path / "p.tsv"
        path.write_text("1;2\n3;4\n")
        panel = load_panel(path, delimiter=";")
        assert panel.m == 2

    def test_json_round_trip(self, tmp_path):
        panel = random_panel(0)
        path = tmp_path / "p.json"
        save_panel_json(panel, path)
        loaded = load_panel_json(path)
        assert loaded.series_names == panel.series_names
        np.testing.assert_array_equal(loaded.values, panel.values)
        schema = json.loads(path.read_text())
        assert set(schema) == {"series_names", "values"}


class TestBuildLaggedDesign:
    def test_k1_1_k2_0(self):
        panel = TimeSeriesPanel([[1.0], [2.0], [3.0], [4.0]])
        design = build_lagged_design(panel, 1, 0)
        np.testing.assert_array_equal(design.C, [[2, 1], [3, 2], [4, 3]])
        np.testing.assert_array_equal(design.Z_target, [[2], [3], [4]])

    def test_k1_1_k2_1_stacked(self):
        panel = TimeSeriesPanel([[1.0], [2.0], [3.0], [4.0], [5.0]])
        design = build_lagged_design(panel, 1, 1)
        np.testing.assert_array_equal(
            design.C, [[3, 2], [4, 3], [5, 4], [2, 1], [3, 2], [4, 3]])

    def test_insufficient_length(self):
        panel = TimeSeriesPanel(np.ones((4, 2)) + np.arange(8).reshape(4, 2))
        with pytest.raises(ValueError, match="need T >= 6"):
            build_lagged_design(panel, 2, 1)

    def test_negative_lag_rejected(self):
        panel = random_panel(1)
        with pytest.raises(ValueError, match="k1 must be >= 0"):
            build_lagged_design(panel, -1, 0)

    def test_row_count(self):
        panel = random_panel(2, T=30, m=2)
        design = build_lagged_design(panel, 2, 3)
        assert design.C.shape == ((30 - 5) * 4, 2 * 3)
        assert design.Z_target.shape == (25, 2)

    def test_deterministic(self):
        panel = random_panel(3)
        d1 = build_lagged_design(panel, 1, 2)
        d2 = build_lagged_design(panel, 1, 2)
        assert d1.C.tobytes() == d2.C.tobytes()
        assert d1.Z_target.tobytes() == d2.Z_target.tobytes()


class TestComponentSeries:
    def test_hand_example(self):
        panel = TimeSeriesPanel([[1.0], [2.0], [3.0], [4.0]])
        f = component_series(panel, np.array([0.6, 0.8]), 1)
        np.testing.assert_allclose(f, [2.0, 3.4, 4.8])

    def test_canonical_vector_selects_series(self):
        panel = random_panel(4, T=15, m=4)
        e1 = np.zeros(4)
        e1[0] = 1.0
        np.testing.assert_array_equal(component_series(panel, e1, 0), panel.values[:, 0])

    def test_against_double_loop(self):
        # brute-force evaluation of the double sum, independent of lag_matrix
        rng = np.random.default_rng(5)
        panel = TimeSeriesPanel(rng.standard_normal((12, 2)))
        k1 = 1
        a = rng.standard_normal(2 * (k1 + 1))
        a /= np.linalg.norm(a)
        f = component_series(panel, a, k1)
        z = panel.values
        for i, t in enumerate(range(k1, panel.T)):
            expected = sum(a[h * panel.m + j] * z[t - h, j]
                           for h in range(k1 + 1) for j in range(panel.m))
            assert abs(f[i] - expected) < 1e-12

    def test_length_mismatch(self):
        panel = random_panel(6)
        with pytest.raises(ValueError, match="expected m"):
            component_series(panel, np.ones(4), 0)

    def test_linear_in_a(self):
        rng = np.random.default_rng(7)
        panel = TimeSeriesPanel(rng.standard_normal((18, 3)))
        for k1 in (0, 1, 2):
            p = 3 * (k1 + 1)
            a, b = rng.standard_normal(p), rng.standard_normal(p)
            alpha, beta = rng.standard_normal(2)
            lhs = component_series(panel, alpha * a + beta * b, k1)
            rhs = alpha * component_series(panel, a, k1) + beta * component_series(panel, b, k1)
            np.testing.assert_allclose(lhs, rhs, atol=1e-12)


class TestBuildFMatrix:
    def test_hand_example(self):
        F = build_f_matrix([2.0, 3.4, 4.8], 1, 1)
        np.testing.assert_allclose(F, [[1, 3.4, 2.0], [1, 4.8, 3.4]])

    def test_k2_zero(self):
        f = np.arange(5.0)
        F = build_f_matrix(f, 1, 0)
        assert F.shape == (5, 2)
        np.testing.assert_array_equal(F[:, 0], 1.0)
        np.testing.assert_array_equal(F[:, 1], f)

    def test_too_short(self):
        with pytest.raises(ValueError, match="too short"):
            build_f_matrix([1.0, 2.0], 0, 2)

    def test_columns_match_block_products(self):
        # column 1+h must equal the lag-(k1+k2-h) slice of the lag matrix times a
        rng = np.random.default_rng(8)
        panel = TimeSeriesPanel(rng.standard_normal((16, 2)))
        k1, k2 = 1, 2
        a = rng.standard_normal(4)
        a /= np.linalg.norm(a)
        f = component_series(panel, a, k1)
        F = build_f_matrix(f, k1, k2)
        z = panel.values
        n = panel.T - (k1 + k2)
        for h in range(k2 + 1):
            lag = k1 + k2 - h
            block = np.hstack([z[lag - g:panel.T - (k1 + k2) + lag - g] for g in range(k1 + 1)])
            np.testing.assert_allclose(F[:, 1 + h], block @ a, atol=1e-12)
            assert block.shape == (n, 2 * (k1 + 1))


def test_c_times_a_reshapes_to_f_columns():
    rng = np.random.default_rng(9)
    for k1 in (0, 1, 2):
        for k2 in (0, 1, 2):
            panel = TimeSeriesPanel(rng.standard_normal((20, 3)))
            a = rng.standard_normal(3 * (k1 + 1))
            a /= np.linalg.norm(a)
            design = build_lagged_design(panel, k1, k2)
            F = build_f_matrix(component_series(panel, a, k1), k1, k2)
            stacked = (design.C @ a).reshape(k2 + 1, design.n_periods)
            np.testing.assert_allclose(stacked.T, F[:, 1:], atol=1e-12)
