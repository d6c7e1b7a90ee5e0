"""Staged feature-engineering pipeline for musical-signal classification.

The pipeline extracts short-time DSP features from audio, summarizes
them into track-level vectors, ranks components by information gain with
a random forest, augments the survivors with autoencoder bottleneck
codes, and classifies with a pairwise-voting SVM. An experiment harness
repeats the whole ladder over seeded stratified splits.
"""

__version__ = "0.1.0"

from .audio import (
    AudioClip,
    CANONICAL_RATE,
    DEFAULT_FRAMING,
    FrameSeries,
    FramingConfig,
    frame_signal,
    load_wav,
    make_framing,
    write_wav,
)
from .autoencoder import (
    Adadelta,
    Autoencoder,
    AutoencoderConfig,
    bce_loss,
    build_autoencoder,
    encode,
    forward,
    load_autoencoder,
    save_autoencoder,
)
from .autoencoder import train as train_autoencoder
from .errors import GenreforgeError
from .features import (
    Spectrum,
    chroma,
    compactness,
    extract_short_time,
    lpc,
    magnitude_spectrum,
    mel_filterbank,
    mfcc,
    spectral_flux,
    spectral_shape,
    time_domain_features,
)
from .integration import (
    BeatFeatures,
    beat_features,
    beat_histogram,
    build_feature_vector,
    derivative_series,
    integrate_feature,
    low_energy_fraction,
    meanvar_windows,
)
from .pipeline import (
    ExperimentConfig,
    ExperimentReport,
    run_experiment,
    run_repetition,
    stratified_split,
)
from .schema import (
    CONTENT_SCHEMA,
    FeatureSchema,
    FeatureVector,
    content_schema,
    read_features_csv,
    write_features_csv,
)
from .selection import (
    ForestConfig,
    SelectionReport,
    apply_selection,
    apply_selection_matrix,
    best_threshold_split,
    entropy,
    split_information_gain,
    train_forest,
)
from .svm import (
    KernelSpec,
    SvmConfig,
    SvmModel,
    grid_search_cv,
    kernel_eval,
    load_svm,
    predict,
    save_svm,
    train_binary,
    train_multiclass,
)

__all__ = [
    "__version__",
    "AudioClip", "CANONICAL_RATE", "DEFAULT_FRAMING", "FrameSeries",
    "FramingConfig", "frame_signal", "load_wav", "make_framing", "write_wav",
    "Adadelta", "Autoencoder", "AutoencoderConfig", "bce_loss",
    "build_autoencoder", "encode", "forward", "load_autoencoder",
    "save_autoencoder", "train_autoencoder",
    "GenreforgeError",
    "Spectrum", "chroma", "compactness", "extract_short_time", "lpc",
    "magnitude_spectrum", "mel_filterbank", "mfcc", "spectral_flux",
    "spectral_shape", "time_domain_features",
    "BeatFeatures", "beat_features", "beat_histogram", "build_feature_vector",
    "derivative_series", "integrate_feature", "low_energy_fraction",
    "meanvar_windows",
    "ExperimentConfig", "ExperimentReport", "run_experiment", "run_repetition",
    "stratified_split",
    "CONTENT_SCHEMA", "FeatureSchema", "FeatureVector", "content_schema",
    "read_features_csv", "write_features_csv",
    "ForestConfig", "SelectionReport", "apply_selection",
    "apply_selection_matrix", "best_threshold_split", "entropy",
    "split_information_gain", "train_forest",
    "KernelSpec", "SvmConfig", "SvmModel", "grid_search_cv", "kernel_eval",
    "load_svm", "predict", "save_svm", "train_binary", "train_multiclass",
]
