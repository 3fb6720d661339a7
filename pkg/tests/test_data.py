"""CSV loading, preprocessing, splits, folds, and synthetic generation."""

import numpy as np
import pytest

from fedsilo import (
    ConfigError,
    DataError,
    Dataset,
    RawTable,
    SyntheticSpec,
    ValidationError,
    generate_synthetic,
    generate_synthetic_raw,
    kfold,
    load_csv,
    preprocess,
    save_csv,
    synthetic_preset,
    train_test_split,
)
from fedsilo.data import SYNTHETIC_PRESETS, preprocess_features


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestLoadCsv:
    def test_basic_load(self, tmp_path):
        path = write(tmp_path, "a,b,label\n0.5,-1.25,1\n0.25,0.75,-1\n")
        table = load_csv(path)
        assert table.header == ("a", "b", "label")
        assert table.feature_names == ("a", "b")
        np.testing.assert_array_equal(table.features, [[0.5, -1.25], [0.25, 0.75]])
        np.testing.assert_array_equal(table.labels, [1.0, -1.0])

    def test_zero_labels_map_to_negative(self, tmp_path):
        path = write(tmp_path, "x,label\n1,0\n2,1\n3,0\n")
        table = load_csv(path)
        np.testing.assert_array_equal(table.labels, [-1.0, 1.0, -1.0])

    def test_custom_label_column(self, tmp_path):
        path = write(tmp_path, "outcome,x\n1,0.5\n-1,0.25\n")
        table = load_csv(path, label_column="outcome")
        assert table.feature_names == ("x",)
        np.testing.assert_array_equal(table.labels, [1.0, -1.0])

    def test_blank_lines_skipped(self, tmp_path):
        path = write(tmp_path, "x,label\n1,1\n\n2,-1\n\n")
        assert len(load_csv(path).rows) == 2

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="cannot read"):
            load_csv(str(tmp_path / "absent.csv"))

    def test_empty_file(self, tmp_path):
        with pytest.raises(DataError, match="empty file"):
            load_csv(write(tmp_path, ""))

    def test_header_only(self, tmp_path):
        with pytest.raises(DataError, match="no data rows"):
            load_csv(write(tmp_path, "x,label\n"))

    def test_missing_label_column(self, tmp_path):
        with pytest.raises(DataError, match="label column 'label' not found"):
            load_csv(write(tmp_path, "a,b\n1,2\n"))

    def test_ragged_row_reports_file_line(self, tmp_path):
        path = write(tmp_path, "x,y,label\n1,2,1\n3,4\n")
        with pytest.raises(DataError, match="line 3: expected 3 fields, got 2"):
            load_csv(path)

    def test_non_numeric_cell_reports_line_and_column(self, tmp_path):
        path = write(tmp_path, "x,label\n1,1\noops,-1\n")
        with pytest.raises(DataError, match="line 3, column 'x'"):
            load_csv(path)

    def test_label_domain_reports_line(self, tmp_path):
        path = write(tmp_path, "x,label\n1,1\n2,2\n")
        with pytest.raises(DataError, match="line 3: label must be -1, 0 or 1"):
            load_csv(path)

    def test_save_load_roundtrip_is_exact(self, tmp_path):
        rng = np.random.default_rng(8)
        rows = np.column_stack(
            [rng.standard_normal(20), rng.integers(-3, 3, 20).astype(float),
             rng.choice([-1.0, 1.0], 20)]
        )
        table = RawTable(header=("u", "v", "label"), rows=rows, label_column="label")
        path = str(tmp_path / "round.csv")
        save_csv(table, path)
        back = load_csv(path)
        assert back.header == table.header
        assert np.array_equal(back.rows, table.rows)


class TestPreprocess:
    def test_appends_bias_then_scales(self):
        """The bias column is part of the row norm that gets scaled."""
        features = np.array([[3.0, 4.0]])  # raw norm 5; with bias sqrt(26)
        X, report = preprocess_features(features)
        expected_scale = np.sqrt(26.0)
        assert report.bias_appended
        assert report.scale_factor == pytest.approx(expected_scale)
        assert report.max_row_norm_before == pytest.approx(expected_scale)
        np.testing.assert_allclose(X[0], np.array([3.0, 4.0, 1.0]) / expected_scale)
        assert np.linalg.norm(X[0]) == pytest.approx(1.0)

    def test_small_data_is_not_inflated(self):
        """Rows already inside the unit ball keep their scale (factor 1)."""
        features = np.array([[0.1, 0.2], [0.05, -0.01]])
        X, report = preprocess_features(features, append_bias=False)
        assert report.scale_factor == 1.0
        np.testing.assert_array_equal(X, features)

    def test_idempotent_without_second_bias(self):
        rng = np.random.default_rng(3)
        features = rng.standard_normal((40, 4)) * 10
        X, report = preprocess_features(features)
        assert report.scale_factor > 1.0
        X2, report2 = preprocess_features(X, append_bias=False)
        assert report2.scale_factor == 1.0
        np.testing.assert_array_equal(X2, X)

    def test_table_preprocess_returns_dataset(self):
        rows = np.array([[2.0, 1.0], [-3.0, -1.0], [0.5, 1.0]])
        table = RawTable(header=("x", "label"), rows=rows, label_column="label")
        data, report = preprocess(table)
        assert isinstance(data, Dataset)
        assert data.dim == 2  # one feature plus bias
        assert data.max_row_norm() <= 1.0 + 1e-12
        assert report.dim == 2

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError):
            preprocess_features(np.array([[1.0, float("nan")]]))

    def test_rejects_empty(self):
        with pytest.raises(ValidationError):
            preprocess_features(np.zeros((0, 3)))


class TestTrainTestSplit:
    def test_sizes_and_partition(self):
        data = generate_synthetic(SyntheticSpec(n=100, dim=3, positive_rate=0.4,
                                                class_separation=2.0, seed=1))
        train, test = train_test_split(data, train_fraction=0.7, seed=5)
        assert len(train) == 70
        assert len(test) == 30

    def test_deterministic_and_seed_sensitive(self):
        data = generate_synthetic(SyntheticSpec(n=60, dim=2, positive_rate=0.5,
                                                class_separation=1.0, seed=2))
        a1, b1 = train_test_split(data, seed=9)
        a2, b2 = train_test_split(data, seed=9)
        a3, _ = train_test_split(data, seed=10)
        assert np.array_equal(a1.X, a2.X) and np.array_equal(b1.y, b2.y)
        assert not np.array_equal(a1.X, a3.X)

    def test_split_is_exhaustive_and_disjoint(self):
        """Every original row lands in exactly one side."""
        rng = np.random.default_rng(4)
        X = rng.standard_normal((50, 2)) * 0.1
        y = rng.choice([-1.0, 1.0], 50)
        data = Dataset(X, y)
        train, test = train_test_split(data, train_fraction=0.6, seed=3)
        combined = np.vstack([train.X, test.X])
        # rows are unique with probability 1, so sorting both sides must match
        order_all = np.lexsort(data.X.T)
        order_comb = np.lexsort(combined.T)
        np.testing.assert_array_equal(data.X[order_all], combined[order_comb])

    @pytest.mark.parametrize("fraction", [0.0, 1.0, -0.2, 1.5])
    def test_degenerate_fraction_rejected(self, fraction):
        data = generate_synthetic(SyntheticSpec(n=20, dim=2, positive_rate=0.5,
                                                class_separation=1.0, seed=0))
        with pytest.raises(ValidationError):
            train_test_split(data, train_fraction=fraction)

    def test_tiny_fraction_on_small_data_rejected(self):
        """A fraction that rounds a side to zero is a configuration error."""
        data = Dataset(np.zeros((3, 2)), np.array([1.0, -1.0, 1.0]))
        with pytest.raises(ValidationError):
            train_test_split(data, train_fraction=0.1)


class TestKfold:
    def test_fold_sizes_near_equal(self):
        data = generate_synthetic(SyntheticSpec(n=11, dim=2, positive_rate=0.5,
                                                class_separation=1.0, seed=6))
        folds = kfold(data, k=5, seed=0)
        sizes = sorted(len(val) for _, val in folds)
        assert sizes == [2, 2, 2, 2, 3]
        for train, val in folds:
            assert len(train) + len(val) == 11

    def test_validation_folds_partition_the_data(self):
        rng = np.random.default_rng(12)
        X = rng.standard_normal((23, 2)) * 0.1
        data = Dataset(X, rng.choice([-1.0, 1.0], 23))
        folds = kfold(data, k=4, seed=2)
        stacked = np.vstack([val.X for _, val in folds])
        assert stacked.shape == data.X.shape
        np.testing.assert_array_equal(
            stacked[np.lexsort(stacked.T)], data.X[np.lexsort(data.X.T)]
        )

    def test_deterministic(self):
        data = generate_synthetic(SyntheticSpec(n=30, dim=2, positive_rate=0.5,
                                                class_separation=1.0, seed=7))
        f1 = kfold(data, k=3, seed=8)
        f2 = kfold(data, k=3, seed=8)
        for (tr1, va1), (tr2, va2) in zip(f1, f2):
            assert np.array_equal(tr1.X, tr2.X)
            assert np.array_equal(va1.X, va2.X)

    def test_k_bounds(self):
        data = Dataset(np.zeros((4, 2)), np.array([1.0, -1.0, 1.0, -1.0]))
        with pytest.raises(ValidationError):
            kfold(data, k=1)
        with pytest.raises(ValidationError):
            kfold(data, k=5)


class TestSynthetic:
    def test_deterministic(self):
        spec = SyntheticSpec(n=200, dim=4, positive_rate=0.3,
                             class_separation=2.0, seed=42)
        a = generate_synthetic(spec)
        b = generate_synthetic(spec)
        assert np.array_equal(a.X, b.X)
        assert np.array_equal(a.y, b.y)

    def test_raw_table_shape_and_names(self):
        spec = SyntheticSpec(n=50, dim=3, positive_rate=0.5,
                             class_separation=1.0, seed=1)
        table = generate_synthetic_raw(spec)
        assert table.header == ("f0", "f1", "f2", "label")
        assert table.rows.shape == (50, 4)
        assert set(np.unique(table.labels)) <= {-1.0, 1.0}

    def test_positive_rate_matches_request(self):
        spec = SyntheticSpec(n=100_000, dim=2, positive_rate=0.2,
                             class_separation=1.0, seed=3)
        data = generate_synthetic(spec)
        assert data.positive_rate == pytest.approx(0.2, abs=0.02)

    def test_generated_data_satisfies_norm_contract(self):
        spec = SyntheticSpec(n=500, dim=6, positive_rate=0.4,
                             class_separation=3.0, seed=4)
        data = generate_synthetic(spec)
        assert data.max_row_norm() <= 1.0 + 1e-12

    def test_wide_separation_is_linearly_learnable(self):
        """A sanity anchor: 10x separation vs noise is essentially separable."""
        spec = SyntheticSpec(n=2000, dim=5, positive_rate=0.5,
                             class_separation=10.0, noise_scale=1.0, seed=5)
        data = generate_synthetic(spec)
        # Fisher direction from class means is enough here
        pos = data.X[data.y > 0].mean(axis=0)
        neg = data.X[data.y < 0].mean(axis=0)
        w = pos - neg
        margins = data.X @ w * data.y
        shifted = margins - np.median(data.X @ w) * data.y
        assert float((shifted > 0).mean()) >= 0.95

    def test_zero_separation_is_unlearnable(self):
        """With no class signal, any linear rule stays near chance."""
        accs = []
        for seed in range(5):
            spec = SyntheticSpec(n=4000, dim=5, positive_rate=0.5,
                                 class_separation=0.0, noise_scale=1.0, seed=seed)
            data = generate_synthetic(spec)
            pos = data.X[data.y > 0].mean(axis=0)
            neg = data.X[data.y < 0].mean(axis=0)
            w = pos - neg
            acc = float(((data.X @ w) * data.y > 0).mean())
            accs.append(acc)
        assert max(accs) <= 0.55

    def test_spec_validation(self):
        with pytest.raises(ValidationError):
            SyntheticSpec(n=1, dim=2, positive_rate=0.5, class_separation=1.0)
        with pytest.raises(ValidationError):
            SyntheticSpec(n=10, dim=0, positive_rate=0.5, class_separation=1.0)
        with pytest.raises(ValidationError):
            SyntheticSpec(n=10, dim=2, positive_rate=0.0, class_separation=1.0)
        with pytest.raises(ValidationError):
            SyntheticSpec(n=10, dim=2, positive_rate=0.5, class_separation=-1.0)

    def test_presets(self):
        assert set(SYNTHETIC_PRESETS) == {"separable", "lced-like", "mimic-like"}
        spec = synthetic_preset("mimic-like")
        assert spec.n == 21_139
        assert spec.positive_rate == pytest.approx(0.13)
        small = synthetic_preset("separable", n=500)
        assert small.n == 500

    def test_unknown_preset_lists_choices(self):
        with pytest.raises(ConfigError, match="separable"):
            synthetic_preset("nope")
