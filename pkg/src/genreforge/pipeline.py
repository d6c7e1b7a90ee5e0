"""Experiment harness: repeated stratified splits over a staged pipeline.

Stage ladder per repetition:

1. ``content_only``: min-max scale the full vectors, train the SVM.
2. ``selected``: fit the forest on raw training vectors, keep components
   with positive cumulative gain, then scale and train.
3. ``selected_plus_bottleneck``: train the autoencoder on the scaled
   selected training vectors, append its codes, rescale the augmented
   vectors, and train.

All fitting (scaling, selection, autoencoder, SVM, grid search) sees
training rows only; test rows are transformed with the fitted artifacts
and touched just once, for accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__ as _version
from .audio import load_wav, make_framing
from .autoencoder import (
    Autoencoder,
    AutoencoderConfig,
    encode,
    save_autoencoder,
    train,
)
from .errors import ConfigError, DegenerateDatasetError, IndivisibleSplitError
from .integration import build_feature_vector
from .schema import FeatureSchema, bottleneck_names, read_features_csv
from .selection import (
    ForestConfig,
    SelectionReport,
    apply_selection_matrix,
    train_forest,
    write_selection_csv,
)
from .svm import (
    GridPoint,
    SvmConfig,
    accuracy as svm_accuracy,
    grid_search_cv,
    predict,
    save_svm,
    train_multiclass,
)

STAGES = ("content_only", "selected", "selected_plus_bottleneck")


@dataclass(frozen=True)
class ScalingParams:
    """Per-component minima and maxima fitted on training rows."""

    mins: np.ndarray
    maxs: np.ndarray


def fit_minmax(X: np.ndarray) -> ScalingParams:
    X = np.asarray(X, dtype=np.float64)
    return ScalingParams(mins=X.min(axis=0), maxs=X.max(axis=0))


def apply_minmax(X: np.ndarray, params: ScalingParams) -> np.ndarray:
    """Map to [0, 1] with the fitted ranges; constant components go to 0,
    out-of-range values clamp."""
    X = np.asarray(X, dtype=np.float64)
    span = params.maxs - params.mins
    safe = np.where(span > 0.0, span, 1.0)
    scaled = (X - params.mins) / safe
    scaled = np.where(span > 0.0, scaled, 0.0)
    return np.clip(scaled, 0.0, 1.0)


def stratified_split(labels, train_per_class: dict[str, int] | None,
                     train_fraction: float | None,
                     seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Seeded exact stratified split; returns (train_idx, test_idx).

    Either pass explicit per-class training counts or a fraction that
    must resolve to a whole number of samples for every class
    (IndivisibleSplitError otherwise).
    """
    labels = np.asarray(labels).astype(str)
    rng = np.random.default_rng(seed)
    train_parts: list[np.ndarray] = []
    test_parts: list[np.ndarray] = []
    for cls in sorted(np.unique(labels)):
        idx = np.flatnonzero(labels == cls)
        if train_per_class is not None:
            n_train = train_per_class[cls]
        else:
            exact = train_fraction * idx.size
            n_train = int(round(exact))
            if abs(exact - n_train) > 1e-9:
                raise IndivisibleSplitError(
                    f"class {cls!r}: {train_fraction} of {idx.size} is not whole")
        if not 0 < n_train < idx.size:
            raise IndivisibleSplitError(
                f"class {cls!r}: cannot take {n_train} of {idx.size} for training")
        shuffled = rng.permutation(idx)
        train_parts.append(np.sort(shuffled[:n_train]))
        test_parts.append(np.sort(shuffled[n_train:]))
    return np.concatenate(train_parts), np.concatenate(test_parts)


def confusion_matrix(true_labels, predicted, classes: tuple[str, ...]) -> np.ndarray:
    """Counts[i, j] = samples of class i predicted as class j."""
    index = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(true_labels, predicted):
        counts[index[str(t)], index[str(p)]] += 1
    return counts


@dataclass
class ExperimentConfig:
    """Everything one experiment run needs, YAML-friendly."""

    features_csv: str | None = None
    audio_dir: str | None = None
    out_dir: str = "runs/latest"
    stages: tuple[str, ...] = STAGES
    n_repetitions: int = 10
    train_fraction: float = 0.9
    seeds: tuple[int, ...] | None = None
    base_seed: int = 1
    scaling_fit_on: str = "train"      # "train" or "all"
    # framing (used only when extracting from audio_dir)
    sample_rate: int = 22050
    frame_ms: float = 50.0
    frame_overlap: float = 0.5
    window_s: float = 1.0
    window_overlap: float = 0.5
    # selection
    n_trees: int = 500
    max_features: int | None = None
    max_depth: int | None = None
    weighted_ig: bool = True
    # autoencoder
    hidden: int = 60
    bottleneck: int = 20
    dropout_p: float = 0.2
    epochs: int = 100
    batch_size: int = 32
    # svm
    kernels: tuple[str, ...] = ("rbf",)
    Cs: tuple[float, ...] = (4.0,)
    gammas: tuple[float, ...] = (0.015625,)
    cv_folds: int = 10

    def repetition_seeds(self) -> tuple[int, ...]:
        if self.seeds is not None:
            return tuple(self.seeds)
        return tuple(range(self.base_seed, self.base_seed + self.n_repetitions))

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a mapping")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        coerced = dict(raw)
        for key in ("stages", "seeds", "kernels", "Cs", "gammas"):
            if key in coerced and coerced[key] is not None:
                if not isinstance(coerced[key], (list, tuple)):
                    raise ConfigError(f"{key} must be a list")
                coerced[key] = tuple(coerced[key])
        try:
            config = cls(**coerced)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        config.validate()
        return config

    def validate(self) -> None:
        if self.features_csv is None and self.audio_dir is None:
            raise ConfigError("config needs features_csv or audio_dir")
        for stage in self.stages:
            if stage not in STAGES:
                raise ConfigError(f"unknown stage {stage!r}")
        if not self.stages:
            raise ConfigError("at least one stage is required")
        if self.scaling_fit_on not in ("train", "all"):
            raise ConfigError("scaling_fit_on must be 'train' or 'all'")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must be inside (0, 1)")
        if self.n_repetitions < 1:
            raise ConfigError("n_repetitions must be positive")


@dataclass
class StageResult:
    """Outcome of one stage within one repetition."""

    stage: str
    accuracy: float
    n_components: int
    confusion: np.ndarray
    svm_config: SvmConfig
    svm_model: Any = None
    cv_table: list[GridPoint] = field(default_factory=list)
    selection: SelectionReport | None = None
    autoencoder: Autoencoder | None = None


@dataclass
class ExperimentReport:
    """All repetition/stage accuracies plus aggregate views."""

    classes: tuple[str, ...]
    stages: tuple[str, ...]
    rows: list[tuple[int, int, str, float, int]]   # (rep, seed, stage, acc, n_comp)
    confusions: dict[str, np.ndarray]
    config_echo: dict[str, Any]
    loss_history: list[float] = field(default_factory=list)

    def stage_accuracies(self, stage: str) -> list[float]:
        return [acc for _, _, s, acc, _ in self.rows if s == stage]

    def stage_mean(self, stage: str) -> float:
        return float(np.mean(self.stage_accuracies(stage)))

    def stage_sd(self, stage: str) -> float:
        return float(np.std(self.stage_accuracies(stage)))


def load_dataset(config: ExperimentConfig) -> tuple[np.ndarray, np.ndarray,
                                                    list[str], FeatureSchema]:
    """Load (matrix, labels, track_ids, schema) from CSV or audio tree.

    An audio tree has one subdirectory per class, each holding WAV files.
    """
    if config.features_csv is not None:
        schema, matrix, track_ids, labels = read_features_csv(config.features_csv)
        return matrix, np.asarray(labels), track_ids, schema
    framing = make_framing(config.sample_rate, config.frame_ms,
                           config.frame_overlap, config.window_s,
                           config.window_overlap)
    root = Path(config.audio_dir)
    wavs = sorted(root.rglob("*.wav"))
    if not wavs:
        raise DegenerateDatasetError(f"no .wav files under {root}")
    vectors, labels, track_ids = [], [], []
    schema: FeatureSchema | None = None
    for wav in wavs:
        label = wav.parent.name if wav.parent != root else "unlabeled"
        vector = build_feature_vector(load_wav(wav, label=label), framing)
        vectors.append(vector.values)
        labels.append(label)
        track_ids.append(vector.track_id)
        schema = vector.schema
    return np.array(vectors), np.asarray(labels), track_ids, schema


def _fit_svm(X_train: np.ndarray, y_train: np.ndarray,
             config: ExperimentConfig, seed: int) -> tuple[Any, SvmConfig,
                                                           list[GridPoint]]:
    best, table = grid_search_cv(X_train, y_train, kernels=config.kernels,
                                 Cs=config.Cs, gammas=config.gammas,
                                 n_folds=config.cv_folds, seed=seed)
    model = train_multiclass(X_train, y_train, best, seed=seed)
    return model, best, table


def _sub_seeds(rep_seed: int, count: int = 4) -> list[int]:
    children = np.random.SeedSequence(rep_seed).spawn(count)
    return [int(c.generate_state(1)[0]) for c in children]


def run_repetition(X: np.ndarray, labels: np.ndarray, schema: FeatureSchema,
                   config: ExperimentConfig, rep_seed: int,
                   split: tuple[np.ndarray, np.ndarray] | None = None,
                   ) -> list[StageResult]:
    """Run the configured stages on one seeded train/test split.

    Pass ``split`` as explicit ``(train_idx, test_idx)`` arrays to pin the
    partition; otherwise a stratified split is drawn from the seed.
    """
    split_seed, forest_seed, ae_seed, svm_seed = _sub_seeds(rep_seed)
    if split is not None:
        train_idx, test_idx = split
    else:
        train_idx, test_idx = stratified_split(labels, None,
                                               config.train_fraction,
                                               seed=split_seed)
    X_train_raw, X_test_raw = X[train_idx], X[test_idx]
    y_train, y_test = labels[train_idx].astype(str), labels[test_idx].astype(str)
    classes = tuple(sorted(np.unique(labels.astype(str))))

    def scale_pair(train_m: np.ndarray,
                   test_m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if config.scaling_fit_on == "all":
            params = fit_minmax(np.vstack([train_m, test_m]))
        else:
            params = fit_minmax(train_m)
        return apply_minmax(train_m, params), apply_minmax(test_m, params)

    def evaluate(stage: str, train_m: np.ndarray, test_m: np.ndarray,
                 selection=None, model_ae=None) -> StageResult:
        model, best, table = _fit_svm(train_m, y_train, config, svm_seed)
        predicted = predict(model, test_m)
        acc = float((predicted == y_test).mean())
        return StageResult(stage=stage, accuracy=acc,
                           n_components=train_m.shape[1],
                           confusion=confusion_matrix(y_test, predicted, classes),
                           svm_config=best, svm_model=model, cv_table=table,
                           selection=selection, autoencoder=model_ae)

    results: list[StageResult] = []
    selection_report: SelectionReport | None = None
    selected_pair: tuple[np.ndarray, np.ndarray] | None = None

    if "content_only" in config.stages:
        train_s, test_s = scale_pair(X_train_raw, X_test_raw)
        results.append(evaluate("content_only", train_s, test_s))

    needs_selection = ("selected" in config.stages
                       or "selected_plus_bottleneck" in config.stages)
    if needs_selection:
        forest_config = ForestConfig(n_trees=config.n_trees,
                                     max_features=config.max_features,
                                     max_depth=config.max_depth,
                                     seed=forest_seed,
                                     weighted_ig=config.weighted_ig)
        _, selection_report = train_forest(X_train_raw, y_train, schema,
                                           forest_config)
        train_sel, _ = apply_selection_matrix(X_train_raw, schema, selection_report)
        test_sel, _ = apply_selection_matrix(X_test_raw, schema, selection_report)
        selected_pair = scale_pair(train_sel, test_sel)

    if "selected" in config.stages:
        results.append(evaluate("selected", *selected_pair,
                                selection=selection_report))

    if "selected_plus_bottleneck" in config.stages:
        train_sel_s, test_sel_s = selected_pair
        ae_config = AutoencoderConfig(n_inputs=train_sel_s.shape[1],
                                      hidden=config.hidden,
                                      bottleneck=config.bottleneck,
                                      dropout_p=config.dropout_p,
                                      epochs=config.epochs,
                                      batch_size=config.batch_size,
                                      seed=ae_seed)
        model_ae = train(train_sel_s, ae_config)
        train_aug = np.hstack([train_sel_s, encode(model_ae, train_sel_s)])
        test_aug = np.hstack([test_sel_s, encode(model_ae, test_sel_s)])
        train_aug, test_aug = scale_pair(train_aug, test_aug)
        results.append(evaluate("selected_plus_bottleneck", train_aug, test_aug,
                                selection=selection_report, model_ae=model_ae))
    return results


def augmented_schema(selection: SelectionReport, n_codes: int) -> FeatureSchema:
    """Schema of stage-three vectors: retained components plus codes."""
    return selection.schema.project(selection.retained).extend(
        bottleneck_names(n_codes))


def run_experiment(config: ExperimentConfig,
                   write_artifacts: bool = True) -> ExperimentReport:
    """Run every repetition and stage; optionally persist artifacts.

    Artifacts land under ``config.out_dir``: report.csv, summary.txt,
    per-stage confusion CSVs, figures, and per-repetition models.
    """
    from . import reporting  # local import keeps matplotlib out of library paths

    X, labels, _track_ids, schema = load_dataset(config)
    classes = tuple(sorted(np.unique(labels.astype(str))))
    rows: list[tuple[int, int, str, float, int]] = []
    confusions = {stage: np.zeros((len(classes), len(classes)), dtype=np.int64)
                  for stage in config.stages}
    loss_history: list[float] = []
    out_dir = Path(config.out_dir)
    if write_artifacts:
        out_dir.mkdir(parents=True, exist_ok=True)
    for rep, rep_seed in enumerate(config.repetition_seeds()):
        stage_results = run_repetition(X, labels, schema, config, rep_seed)
        rep_dir = out_dir / f"rep{rep:02d}"
        if write_artifacts:
            rep_dir.mkdir(parents=True, exist_ok=True)
        wrote_selection = False
        for result in stage_results:
            rows.append((rep, rep_seed, result.stage, result.accuracy,
                         result.n_components))
            confusions[result.stage] += result.confusion
            if result.autoencoder is not None:
                loss_history = list(result.autoencoder.loss_history)
            if write_artifacts:
                save_svm(result.svm_model, rep_dir / f"svm_{result.stage}.json")
                if result.selection is not None and not wrote_selection:
                    write_selection_csv(rep_dir / "selection.csv", result.selection)
                    wrote_selection = True
                if result.autoencoder is not None:
                    save_autoencoder(result.autoencoder, rep_dir / "autoencoder.npz")
    report = ExperimentReport(classes=classes, stages=tuple(config.stages),
                              rows=rows, confusions=confusions,
                              config_echo={"version": _version,
                                           **_config_echo(config)},
                              loss_history=loss_history)
    if write_artifacts:
        reporting.write_run_outputs(out_dir, report)
    return report


def _config_echo(config: ExperimentConfig) -> dict[str, Any]:
    echo = {}
    for name in config.__dataclass_fields__:
        value = getattr(config, name)
        if isinstance(value, tuple):
            value = list(value)
        echo[name] = value
    return echo
