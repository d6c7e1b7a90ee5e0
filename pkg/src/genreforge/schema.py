"""Feature vector schema: component ordering, naming, and CSV round-trip.

A track-level vector carries four summary statistics per feature family:
``mean`` and ``sd`` of the windowed values, plus ``dmean`` and ``dsd``
computed on first differences. Families marked as having no derivative
statistics contribute only ``mean``/``sd``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SchemaMismatchError, UnreadableFileError

N_MFCC = 26
N_CHROMA = 12
LPC_ORDER = 10

# Short-time families in column order of the per-frame feature matrix.
SHORT_TIME_FAMILIES: tuple[tuple[str, int], ...] = (
    ("compactness", 1),
    ("energy", 1),
    ("energy_entropy", 1),
    ("rms", 1),
    ("zero_crossing", 1),
    ("mfcc", N_MFCC),
    ("chroma", N_CHROMA),
    ("chroma_sd", 1),
    ("lpc", LPC_ORDER),
    ("spectral_centroid", 1),
    ("spectral_flux", 1),
    ("spectral_rolloff", 1),
    ("spectral_spread", 1),
    ("spectral_variability", 1),
)

N_SHORT_TIME = sum(width for _, width in SHORT_TIME_FAMILIES)

# Track-level families: (name, width, has_derivative_stats, source).
# Source "short" means the family is a short-time column summarized over
# texture windows; "window" means it is already a medium-time series
# (one value per window) summarized directly.
VECTOR_FAMILIES: tuple[tuple[str, int, bool, str], ...] = (
    ("compactness", 1, True, "short"),
    ("energy", 1, True, "short"),
    ("energy_entropy", 1, False, "short"),
    ("low_energy", 1, True, "window"),
    ("rms", 1, True, "short"),
    ("zero_crossing", 1, True, "short"),
    ("strongest_beat", 1, True, "window"),
    ("beat_strength", 1, True, "window"),
    ("beat_sum", 1, True, "window"),
    ("mfcc", N_MFCC, True, "short"),
    ("chroma", N_CHROMA, False, "short"),
    ("chroma_sd", 1, False, "short"),
    ("lpc", LPC_ORDER, True, "short"),
    ("spectral_centroid", 1, True, "short"),
    ("spectral_flux", 1, True, "short"),
    ("spectral_rolloff", 1, True, "short"),
    ("spectral_spread", 1, True, "short"),
    ("spectral_variability", 1, True, "short"),
)

FULL_STATS = ("mean", "sd", "dmean", "dsd")
BASE_STATS = ("mean", "sd")


def component_name(family: str, width: int, index: int, stat: str) -> str:
    if width == 1:
        return f"{family}_{stat}"
    return f"{family}{index:02d}_{stat}"


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered component names of one vector layout."""

    names: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.names)

    def index_of(self, name: str) -> int:
        return self.names.index(name)

    def project(self, mask: np.ndarray) -> "FeatureSchema":
        """Schema restricted to components where ``mask`` is True."""
        mask = np.asarray(mask, dtype=bool)
        if mask.size != len(self.names):
            raise SchemaMismatchError(
                f"mask of {mask.size} for schema of {len(self.names)}")
        return FeatureSchema(tuple(n for n, keep in zip(self.names, mask) if keep))

    def extend(self, extra: tuple[str, ...]) -> "FeatureSchema":
        return FeatureSchema(self.names + tuple(extra))


def short_time_names() -> tuple[str, ...]:
    names = []
    for family, width in SHORT_TIME_FAMILIES:
        for index in range(width):
            names.append(component_name(family, width, index, "value"))
    return tuple(names)


def content_schema() -> FeatureSchema:
    """The full track-level layout (grouped by family, stats innermost)."""
    names = []
    for family, width, has_deriv, _source in VECTOR_FAMILIES:
        stats = FULL_STATS if has_deriv else BASE_STATS
        for index in range(width):
            for stat in stats:
                names.append(component_name(family, width, index, stat))
    return FeatureSchema(tuple(names))


def bottleneck_names(n_codes: int) -> tuple[str, ...]:
    return tuple(f"bottleneck{i:02d}" for i in range(n_codes))


CONTENT_SCHEMA = content_schema()


@dataclass(frozen=True)
class FeatureVector:
    """One track's feature values, aligned with a schema."""

    values: np.ndarray
    schema: FeatureSchema
    track_id: str = ""
    label: str | None = None

    def __post_init__(self) -> None:
        if self.values.shape != (len(self.schema),):
            raise SchemaMismatchError(
                f"{self.values.shape} values for schema of {len(self.schema)}")


def write_features_csv(path: str | Path, schema: FeatureSchema,
                       matrix: np.ndarray, track_ids: list[str],
                       labels: list[str]) -> None:
    """Write one row per track: components, then track_id and label.

    Floats are serialized with repr(), which round-trips float64 exactly.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != len(schema):
        raise SchemaMismatchError(
            f"matrix {matrix.shape} for schema of {len(schema)}")
    if matrix.shape[0] != len(track_ids) or matrix.shape[0] != len(labels):
        raise SchemaMismatchError("row count differs from id/label count")
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(list(schema.names) + ["track_id", "label"])
        for row, track_id, label in zip(matrix, track_ids, labels):
            writer.writerow([repr(float(v)) for v in row] + [track_id, label])


def read_features_csv(path: str | Path) -> tuple[FeatureSchema, np.ndarray,
                                                 list[str], list[str]]:
    """Read a feature CSV back into (schema, matrix, track_ids, labels)."""
    try:
        with open(path, newline="") as handle:
            rows = list(csv.reader(handle))
    except OSError as exc:
        raise UnreadableFileError(f"{path}: {exc}") from exc
    if not rows:
        raise SchemaMismatchError(f"{path}: empty file")
    header = rows[0]
    if len(header) < 3 or header[-2:] != ["track_id", "label"]:
        raise SchemaMismatchError(
            f"{path}: header must end with track_id,label")
    schema = FeatureSchema(tuple(header[:-2]))
    track_ids: list[str] = []
    labels: list[str] = []
    values = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise SchemaMismatchError(f"{path}: line {i} has {len(row)} fields")
        try:
            values.append([float(v) for v in row[:-2]])
        except ValueError as exc:
            raise SchemaMismatchError(f"{path}: line {i}: {exc}") from exc
        track_ids.append(row[-2])
        labels.append(row[-1])
    matrix = np.array(values, dtype=np.float64).reshape(len(values), len(schema))
    return schema, matrix, track_ids, labels
