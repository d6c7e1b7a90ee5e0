"""Experiment pipeline: splits, scaling, stage ladder, leakage guard,
artifact layout, and end-to-end determinism."""

import numpy as np
import pytest

from genreforge.errors import ConfigError, IndivisibleSplitError
from genreforge.pipeline import (
    ExperimentConfig,
    apply_minmax,
    augmented_schema,
    confusion_matrix,
    fit_minmax,
    load_dataset,
    run_experiment,
    run_repetition,
    stratified_split,
)
from genreforge.schema import FeatureSchema, write_features_csv
from genreforge.synthetic import feature_dataset

FAST = dict(n_trees=20, max_features=48, max_depth=3, epochs=5,
            kernels=("linear",), Cs=(1.0,), gammas=(0.015625,), cv_folds=3)


def fast_config(**overrides) -> ExperimentConfig:
    merged = {**FAST, **overrides}
    return ExperimentConfig(**merged)


class TestStratifiedSplit:
    def test_exact_per_class_fraction(self):
        labels = np.repeat([f"g{i}" for i in range(10)], 100)
        train_idx, test_idx = stratified_split(labels, None, 0.9, seed=0)
        assert train_idx.size == 900 and test_idx.size == 100
        for g in np.unique(labels):
            assert np.sum(labels[train_idx] == g) == 90
            assert np.sum(labels[test_idx] == g) == 10
        combined = np.sort(np.concatenate([train_idx, test_idx]))
        np.testing.assert_array_equal(combined, np.arange(1000))

    def test_explicit_counts(self):
        labels = np.array(["a"] * 8 + ["b"] * 6)
        train_idx, test_idx = stratified_split(labels, {"a": 5, "b": 4},
                                               None, seed=1)
        assert np.sum(labels[train_idx] == "a") == 5
        assert np.sum(labels[train_idx] == "b") == 4
        assert test_idx.size == 5

    def test_deterministic_per_seed(self):
        labels = np.repeat(["x", "y"], 20)
        a = stratified_split(labels, None, 0.75, seed=3)
        b = stratified_split(labels, None, 0.75, seed=3)
        np.testing.assert_array_equal(a[0], b[0])
        c = stratified_split(labels, None, 0.75, seed=4)
        assert not np.array_equal(a[0], c[0])

    def test_indivisible_fraction_rejected(self):
        labels = np.repeat(["a", "b", "c"], 10)
        with pytest.raises(IndivisibleSplitError):
            stratified_split(labels, None, 0.85, seed=0)   # 8.5 per class


class TestMinmaxScaling:
    def test_midpoint_maps_to_half(self):
        X = np.array([[2.0], [4.0]])
        params = fit_minmax(X)
        assert apply_minmax(np.array([[3.0]]), params)[0, 0] == 0.5

    def test_constant_component_goes_to_zero(self):
        X = np.full((5, 2), 7.0)
        X[:, 1] = np.arange(5)
        scaled = apply_minmax(X, fit_minmax(X))
        np.testing.assert_array_equal(scaled[:, 0], 0.0)
        assert scaled[:, 1].min() == 0.0 and scaled[:, 1].max() == 1.0

    def test_out_of_range_rows_clamp(self):
        params = fit_minmax(np.array([[0.0], [10.0]]))
        probe = np.array([[-5.0], [15.0]])
        scaled = apply_minmax(probe, params)
        np.testing.assert_array_equal(scaled.ravel(), [0.0, 1.0])

    def test_train_rows_span_unit_interval(self, rng):
        X = rng.standard_normal((30, 6)) * 13 + 5
        scaled = apply_minmax(X, fit_minmax(X))
        np.testing.assert_allclose(scaled.min(axis=0), 0.0, atol=1e-15)
        np.testing.assert_allclose(scaled.max(axis=0), 1.0, atol=1e-15)


class TestConfusionMatrix:
    def test_counts_by_true_row(self):
        true = ["a", "a", "b", "b", "b"]
        pred = ["a", "b", "b", "b", "a"]
        counts = confusion_matrix(true, pred, ("a", "b"))
        np.testing.assert_array_equal(counts, [[1, 1], [1, 2]])
        assert counts.sum() == 5


class TestExperimentConfig:
    def test_from_dict_roundtrip(self):
        config = ExperimentConfig.from_dict(
            {"features_csv": "feats.csv", "stages": ["content_only"],
             "Cs": [2.0, 8.0], "n_repetitions": 3})
        assert config.features_csv == "feats.csv"
        assert config.stages == ("content_only",)
        assert config.Cs == (2.0, 8.0)

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"features_csv": "x", "typo_key": 1})

    def test_validate_needs_input_and_known_stage(self):
        with pytest.raises(ConfigError):
            ExperimentConfig().validate()
        with pytest.raises(ConfigError):
            ExperimentConfig(features_csv="x",
                             stages=("warp_drive",)).validate()

    def test_repetition_seeds(self):
        assert ExperimentConfig(base_seed=5,
                                n_repetitions=3).repetition_seeds() == (5, 6, 7)
        assert ExperimentConfig(seeds=(9, 2)).repetition_seeds() == (9, 2)


class TestRunRepetition:
    def _dataset(self, seed=0):
        return feature_dataset(n_per_class=40, n_classes=3, n_informative=20,
                               separation=5.0, seed=seed)

    def test_single_strong_component_reaches_full_accuracy(self):
        rng = np.random.default_rng(1)
        schema = FeatureSchema(tuple(f"c{i:02d}" for i in range(10)))
        labels = np.repeat(["a", "b", "c"], 40)
        X = 0.1 * rng.standard_normal((120, 10))
        X[:, 0] += np.repeat([0.0, 5.0, 10.0], 40)
        config = fast_config(stages=("content_only",), train_fraction=0.75)
        results = run_repetition(X, labels, schema, config, rep_seed=7)
        assert len(results) == 1
        assert results[0].stage == "content_only"
        assert results[0].accuracy == 1.0
        assert results[0].n_components == 10
        assert results[0].confusion.sum() == 30

    def test_stage_three_width_is_retained_plus_codes(self):
        X, labels, _, schema = self._dataset()
        config = fast_config(train_fraction=0.9)
        results = run_repetition(X, labels, schema, config, rep_seed=11)
        by_stage = {r.stage: r for r in results}
        selection = by_stage["selected"].selection
        n_retained = int(np.sum(selection.retained))
        assert by_stage["selected"].n_components == n_retained
        assert by_stage["selected_plus_bottleneck"].n_components \
            == n_retained + config.bottleneck
        aug = augmented_schema(selection, config.bottleneck)
        assert len(aug) == n_retained + config.bottleneck
        assert aug.names[-1].startswith("bottleneck")

    def test_selection_improves_or_holds_accuracy(self):
        X, labels, _, schema = self._dataset(seed=3)
        config = fast_config(stages=("content_only", "selected"),
                             train_fraction=0.9)
        results = run_repetition(X, labels, schema, config, rep_seed=2)
        by_stage = {r.stage: r.accuracy for r in results}
        assert by_stage["selected"] >= by_stage["content_only"] - 0.05

    def test_fitted_artifacts_ignore_test_labels(self):
        """Shuffling test-set labels must not move anything that was fit."""
        X, labels, _, schema = self._dataset(seed=4)
        train_idx, test_idx = stratified_split(labels, None, 0.9, seed=99)
        shuffled = labels.copy()
        shuffled[test_idx] = np.random.default_rng(5).permutation(
            shuffled[test_idx])
        assert sorted(shuffled[test_idx]) == sorted(labels[test_idx])
        assert not np.array_equal(shuffled[test_idx], labels[test_idx])

        config = fast_config(train_fraction=0.9)
        base = run_repetition(X, labels, schema, config, rep_seed=13,
                              split=(train_idx, test_idx))
        moved = run_repetition(X, shuffled, schema, config, rep_seed=13,
                               split=(train_idx, test_idx))
        base_stage = {r.stage: r for r in base}
        moved_stage = {r.stage: r for r in moved}
        sel_a = base_stage["selected"].selection
        sel_b = moved_stage["selected"].selection
        assert sel_a.cumulative_gain.tobytes() == sel_b.cumulative_gain.tobytes()
        np.testing.assert_array_equal(sel_a.retained, sel_b.retained)
        ae_a = base_stage["selected_plus_bottleneck"].autoencoder
        ae_b = moved_stage["selected_plus_bottleneck"].autoencoder
        for wa, wb in zip(ae_a.weights, ae_b.weights):
            assert wa.tobytes() == wb.tobytes()
        for stage in ("content_only", "selected", "selected_plus_bottleneck"):
            ma = base_stage[stage].svm_model
            mb = moved_stage[stage].svm_model
            for pair, machine in ma.machines.items():
                other = mb.machines[pair]
                assert machine.support_vectors.tobytes() \
                    == other.support_vectors.tobytes()
                assert machine.dual_coef.tobytes() == other.dual_coef.tobytes()
                assert machine.bias == other.bias

    def test_repetitions_differ_but_seeds_reproduce(self):
        X, labels, _, schema = self._dataset(seed=6)
        config = fast_config(stages=("selected",), train_fraction=0.9)
        first = run_repetition(X, labels, schema, config, rep_seed=1)
        again = run_repetition(X, labels, schema, config, rep_seed=1)
        other = run_repetition(X, labels, schema, config, rep_seed=2)
        assert first[0].selection.cumulative_gain.tobytes() \
            == again[0].selection.cumulative_gain.tobytes()
        assert first[0].selection.cumulative_gain.tobytes() \
            != other[0].selection.cumulative_gain.tobytes()


class TestLoadDataset:
    def test_csv_roundtrip(self, tmp_path):
        X, labels, track_ids, schema = feature_dataset(
            n_per_class=5, n_classes=2, n_informative=4, seed=8)
        path = tmp_path / "feats.csv"
        write_features_csv(path, schema, X, track_ids, list(labels))
        config = ExperimentConfig(features_csv=str(path))
        X2, labels2, ids2, schema2 = load_dataset(config)
        np.testing.assert_array_equal(X2, X)
        assert list(labels2) == list(labels)
        assert ids2 == track_ids
        assert schema2.names == schema.names


class TestRunExperiment:
    def _write_features(self, tmp_path, seed=0):
        X, labels, track_ids, schema = feature_dataset(
            n_per_class=20, n_classes=3, n_informative=20, separation=5.0,
            seed=seed)
        path = tmp_path / "feats.csv"
        write_features_csv(path, schema, X, track_ids, list(labels))
        return path

    def test_rows_and_artifacts(self, tmp_path):
        feats = self._write_features(tmp_path)
        out = tmp_path / "run"
        config = fast_config(features_csv=str(feats), out_dir=str(out),
                             n_repetitions=2, train_fraction=0.9)
        report = run_experiment(config)
        assert len(report.rows) == 2 * 3
        assert report.stages == ("content_only", "selected",
                                 "selected_plus_bottleneck")
        for stage in report.stages:
            mean, sd = report.stage_accuracies(stage)
            assert 0.0 <= mean <= 1.0 and sd >= 0.0
            assert report.confusions[stage].sum() == 2 * 6   # reps * test size
            assert (out / f"confusion_{stage}.csv").exists()
            assert (out / "figures" / f"confusion_{stage}.png").exists()
        assert (out / "report.csv").exists()
        assert (out / "summary.txt").exists()
        assert (out / "figures" / "accuracy_by_stage.png").exists()
        assert (out / "figures" / "autoencoder_loss.png").exists()
        for rep in ("rep00", "rep01"):
            assert (out / rep / "svm_content_only.json").exists()
            assert (out / rep / "svm_selected.json").exists()
            assert (out / rep / "svm_selected_plus_bottleneck.json").exists()
            assert (out / rep / "selection.csv").exists()
            assert (out / rep / "autoencoder.npz").exists()

    def test_two_runs_are_byte_identical(self, tmp_path):
        feats = self._write_features(tmp_path, seed=9)
        outputs = []
        for name in ("run_a", "run_b"):
            out = tmp_path / name
            config = fast_config(features_csv=str(feats), out_dir=str(out),
                                 n_repetitions=1, train_fraction=0.9)
            run_experiment(config)
            outputs.append(out)
        a, b = outputs
        for rel in ("report.csv", "summary.txt",
                    "rep00/selection.csv", "rep00/autoencoder.npz",
                    "rep00/svm_selected.json",
                    "figures/accuracy_by_stage.png",
                    "figures/autoencoder_loss.png"):
            assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel

    def test_no_artifacts_mode_writes_nothing(self, tmp_path):
        feats = self._write_features(tmp_path, seed=10)
        out = tmp_path / "dry"
        config = fast_config(features_csv=str(feats), out_dir=str(out),
                             n_repetitions=1, train_fraction=0.9,
                             stages=("content_only",))
        report = run_experiment(config, write_artifacts=False)
        assert len(report.rows) == 1
        assert not out.exists()
