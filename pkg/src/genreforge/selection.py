"""Information-gain feature ranking with a from-scratch random forest.

Trees are grown on bootstrap resamples; each node scans a random subset
of components for the midpoint threshold with the highest information
gain. Every accepted split credits its component's score. A component is
retained iff its accumulated score is strictly positive, i.e. it decided
at least one split anywhere in the forest.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateDatasetError,
    EmptySetError,
    NotAPartitionError,
    SchemaMismatchError,
)
from .schema import FeatureSchema, FeatureVector


def entropy(labels) -> float:
    """Shannon entropy of a label multiset, in bits."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise EmptySetError("entropy of an empty label set")
    _, counts = np.unique(labels, return_counts=True)
    return entropy_from_counts(counts)


def entropy_from_counts(counts) -> float:
    total = int(np.sum(counts))
    if total == 0:
        raise EmptySetError("entropy of an empty label set")
    result = 0.0
    for count in counts:
        if count:
            p = count / total
            result -= p * math.log2(p)
    return result


def split_information_gain(parent_labels, children) -> float:
    """Entropy reduction of splitting ``parent_labels`` into ``children``.

    ``children`` must partition the parent multiset (order-insensitively)
    or NotAPartitionError is raised. Empty children contribute nothing.
    """
    parent = np.asarray(parent_labels)
    if parent.size == 0:
        raise EmptySetError("split of an empty label set")
    parts = [np.asarray(c) for c in children]
    merged = np.concatenate([p for p in parts if p.size]) if parts else np.array([])
    if merged.size != parent.size or not np.array_equal(
            np.sort(merged), np.sort(parent)):
        raise NotAPartitionError("children do not partition the parent labels")
    gain = entropy(parent)
    for part in parts:
        if part.size:
            gain -= (part.size / parent.size) * entropy(part)
    return gain


def _entropy_rows(counts: np.ndarray) -> np.ndarray:
    """Entropy in bits of each row of a class-count matrix."""
    totals = counts.sum(axis=1)
    terms = np.where(counts > 0, counts * np.log2(np.where(counts > 0, counts, 1.0)),
                     0.0).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = np.where(totals > 0, np.log2(np.where(totals > 0, totals, 1.0))
                       - terms / np.where(totals > 0, totals, 1.0), 0.0)
    return ent


def best_threshold_split(values, labels) -> tuple[float, float]:
    """Best midpoint threshold of one component for these labels.

    Candidate thresholds are midpoints between adjacent distinct sorted
    values; the left child takes values <= threshold. Returns
    (threshold, information_gain); ties in gain go to the smallest
    threshold. A constant component returns (nan, 0.0).
    """
    values = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels)
    if values.size == 0:
        raise EmptySetError("split of an empty component")
    if values.size != labels.size:
        raise SchemaMismatchError(
            f"{values.size} values against {labels.size} labels")
    order = np.argsort(values, kind="stable")
    v = values[order]
    if v[0] == v[-1]:
        return math.nan, 0.0
    _, y = np.unique(labels[order], return_inverse=True)
    n = v.size
    k = int(y.max()) + 1
    one_hot = np.zeros((n, k))
    one_hot[np.arange(n), y] = 1.0
    left_counts = one_hot.cumsum(axis=0)
    total_counts = left_counts[-1]

    boundaries = np.nonzero(v[:-1] != v[1:])[0]
    lefts = left_counts[boundaries]
    rights = total_counts[None, :] - lefts
    n_left = boundaries + 1.0
    n_right = n - n_left
    parent_entropy = _entropy_rows(total_counts[None, :])[0]
    gains = parent_entropy - (n_left / n) * _entropy_rows(lefts) \
        - (n_right / n) * _entropy_rows(rights)
    best = int(np.argmax(gains))
    threshold = (v[boundaries[best]] + v[boundaries[best] + 1]) / 2.0
    return float(threshold), float(gains[best])


@dataclass(frozen=True)
class ForestConfig:
    """Forest geometry and scoring options.

    ``max_features`` defaults to floor(sqrt(n_components)) when None.
    ``weighted_ig`` scales each split's credit by the fraction of the
    tree's bootstrap samples reaching that node; turning it off sums
    raw gains.
    """

    n_trees: int = 500
    max_features: int | None = None
    max_depth: int | None = None
    min_samples_split: int = 2
    seed: int = 0
    weighted_ig: bool = True


@dataclass(frozen=True)
class SplitRecord:
    """One accepted split, kept for auditability."""

    component: int
    threshold: float
    gain: float
    n_samples: int
    depth: int


@dataclass
class Forest:
    """Audit trail of a trained forest: the splits of every tree."""

    config: ForestConfig
    trees: list[list[SplitRecord]] = field(default_factory=list)


@dataclass(frozen=True)
class SelectionReport:
    """Cumulative per-component scores and the retention mask."""

    schema: FeatureSchema
    cumulative_gain: np.ndarray
    retained: np.ndarray

    @property
    def n_retained(self) -> int:
        return int(self.retained.sum())


def _grow_tree(X: np.ndarray, y: np.ndarray, config: ForestConfig,
               max_features: int, rng: np.random.Generator,
               cumulative: np.ndarray) -> list[SplitRecord]:
    n_root = X.shape[0]
    n_components = X.shape[1]
    splits: list[SplitRecord] = []
    stack: list[tuple[np.ndarray, int]] = [(np.arange(n_root), 0)]
    while stack:
        idx, depth = stack.pop()
        node_labels = y[idx]
        if idx.size < config.min_samples_split:
            continue
        if (node_labels == node_labels[0]).all():
            continue
        if config.max_depth is not None and depth >= config.max_depth:
            continue
        candidates = rng.choice(n_components, size=max_features, replace=False)
        best_gain = 0.0
        best_component = -1
        best_threshold = math.nan
        for component in candidates:
            threshold, gain = best_threshold_split(X[idx, component], node_labels)
            if gain > best_gain:
                best_gain = gain
                best_component = int(component)
                best_threshold = threshold
        if best_component < 0:
            continue
        weight = idx.size / n_root if config.weighted_ig else 1.0
        cumulative[best_component] += weight * best_gain
        splits.append(SplitRecord(component=best_component,
                                  threshold=best_threshold, gain=best_gain,
                                  n_samples=idx.size, depth=depth))
        left = idx[X[idx, best_component] <= best_threshold]
        right = idx[X[idx, best_component] > best_threshold]
        stack.append((right, depth + 1))
        stack.append((left, depth + 1))
    return splits


def train_forest(X: np.ndarray, labels, schema: FeatureSchema,
                 config: ForestConfig = ForestConfig()) -> tuple[Forest, SelectionReport]:
    """Grow the forest and score every component.

    The dataset needs at least two classes with two samples each.
    Identical seeds give bit-identical reports.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    if X.ndim != 2 or X.shape[0] != labels.size:
        raise SchemaMismatchError(f"matrix {X.shape} against {labels.size} labels")
    if X.shape[1] != len(schema):
        raise SchemaMismatchError(
            f"{X.shape[1]} components against schema of {len(schema)}")
    classes, counts = np.unique(labels, return_counts=True)
    if classes.size < 2 or counts.min() < 2:
        raise DegenerateDatasetError(
            "need at least two classes with two samples each")
    n_components = X.shape[1]
    max_features = config.max_features
    if max_features is None:
        max_features = max(1, int(math.isqrt(n_components)))
    max_features = min(max_features, n_components)

    cumulative = np.zeros(n_components)
    forest = Forest(config=config)
    tree_seeds = np.random.SeedSequence(config.seed).spawn(config.n_trees)
    n = X.shape[0]
    for tree_seed in tree_seeds:
        rng = np.random.default_rng(tree_seed)
        bootstrap = rng.integers(0, n, size=n)
        forest.trees.append(_grow_tree(X[bootstrap], labels[bootstrap], config,
                                       max_features, rng, cumulative))
    report = SelectionReport(schema=schema, cumulative_gain=cumulative,
                             retained=cumulative > 0.0)
    return forest, report


def apply_selection(vector: FeatureVector, report: SelectionReport) -> FeatureVector:
    """Project a vector onto the retained components."""
    if vector.schema.names != report.schema.names:
        raise SchemaMismatchError("vector schema differs from the report schema")
    return FeatureVector(values=vector.values[report.retained],
                         schema=report.schema.project(report.retained),
                         track_id=vector.track_id, label=vector.label)


def apply_selection_matrix(matrix: np.ndarray, schema: FeatureSchema,
                           report: SelectionReport) -> tuple[np.ndarray, FeatureSchema]:
    """Project a (n_tracks, n_components) matrix onto retained components."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if schema.names != report.schema.names or matrix.shape[1] != len(schema):
        raise SchemaMismatchError("matrix schema differs from the report schema")
    return matrix[:, report.retained], report.schema.project(report.retained)


def write_selection_csv(path: str | Path, report: SelectionReport) -> None:
    """Write (component_name, cumulative_gain, retained) rows."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["component", "cumulative_gain", "retained"])
        for name, gain, kept in zip(report.schema.names, report.cumulative_gain,
                                    report.retained):
            writer.writerow([name, repr(float(gain)), int(kept)])


def read_selection_csv(path: str | Path) -> SelectionReport:
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows or rows[0] != ["component", "cumulative_gain", "retained"]:
        raise SchemaMismatchError(f"{path}: not a selection report")
    names = tuple(row[0] for row in rows[1:])
    gains = np.array([float(row[1]) for row in rows[1:]])
    retained = np.array([bool(int(row[2])) for row in rows[1:]])
    return SelectionReport(schema=FeatureSchema(names), cumulative_gain=gains,
                           retained=retained)
