"""Two-stage temporal summarization of short-time features.

Stage one slides a texture window over each per-frame series and keeps
the window mean and population standard deviation; stage two averages
those across windows, giving one M and one SD per feature. The same is
done on first-difference series for the dM/dSD statistics. Window-level
series (low-energy fraction and the beat quantities) are summarized
directly: mean/sd over the series, mean/sd of its first differences.
"""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from .audio import AudioClip, DEFAULT_FRAMING, FrameSeries, FramingConfig, frame_signal
from .errors import ClipTooShortError, TooShortError
from .features import extract_short_time, magnitude_spectrum
from .schema import (
    CONTENT_SCHEMA,
    FeatureVector,
    SHORT_TIME_FAMILIES,
    VECTOR_FAMILIES,
)

BEAT_WINDOW_S = 6.0
BEAT_HOP_S = 3.0
BPM_MIN = 40.0
BPM_MAX = 200.0

WindowStats = namedtuple("WindowStats", ["mean", "sd", "dmean", "dsd"])


def derivative_series(series: np.ndarray) -> np.ndarray:
    """First differences, one element shorter than the input."""
    series = np.asarray(series, dtype=np.float64)
    if series.size < 2:
        raise TooShortError(f"need at least 2 values, got {series.size}")
    return np.diff(series)


def meanvar_windows(series: np.ndarray, window_frames: int,
                    window_hop: int) -> np.ndarray:
    """Window mean and population sd of a series; shape (2, n_windows).

    Windows of ``window_frames`` values advance by ``window_hop``;
    trailing values that do not fill a window are dropped.
    """
    series = np.asarray(series, dtype=np.float64)
    if series.size < window_frames:
        raise TooShortError(
            f"{series.size} values < one {window_frames}-frame window")
    n_windows = (series.size - window_frames) // window_hop + 1
    idx = np.arange(window_frames)[None, :] + window_hop * np.arange(n_windows)[:, None]
    windows = series[idx]
    return np.stack([windows.mean(axis=1), windows.std(axis=1)])


def integrate_feature(window_matrix: np.ndarray) -> tuple[float, float]:
    """Average each statistic row across windows: (mean of means, mean of sds)."""
    window_matrix = np.asarray(window_matrix, dtype=np.float64)
    if window_matrix.ndim != 2 or window_matrix.shape[0] != 2:
        raise ValueError(f"expected a (2, n) matrix, got {window_matrix.shape}")
    means = window_matrix.mean(axis=1)
    return float(means[0]), float(means[1])


def low_energy_fraction(rms_series: np.ndarray, window_frames: int,
                        window_hop: int) -> np.ndarray:
    """Per-window fraction of frames whose RMS is strictly below the
    window's mean RMS."""
    rms_series = np.asarray(rms_series, dtype=np.float64)
    if rms_series.size < window_frames:
        raise TooShortError(
            f"{rms_series.size} values < one {window_frames}-frame window")
    n_windows = (rms_series.size - window_frames) // window_hop + 1
    idx = np.arange(window_frames)[None, :] + window_hop * np.arange(n_windows)[:, None]
    windows = rms_series[idx]
    below = windows < windows.mean(axis=1, keepdims=True)
    return below.mean(axis=1)


def window_series_stats(series: np.ndarray) -> WindowStats:
    """Summarize a medium-time series: mean/sd, and mean/sd of diffs.

    With fewer than two values the derivative statistics are 0.
    """
    series = np.asarray(series, dtype=np.float64)
    if series.size == 0:
        return WindowStats(0.0, 0.0, 0.0, 0.0)
    mean = float(series.mean())
    sd = float(series.std())
    if series.size < 2:
        return WindowStats(mean, sd, 0.0, 0.0)
    diffs = np.diff(series)
    return WindowStats(mean, sd, float(diffs.mean()), float(diffs.std()))


def onset_envelope(series: FrameSeries) -> np.ndarray:
    """Half-wave-rectified spectral difference per frame (element 0 is 0).

    The onset strength of frame i sums the positive magnitude increases
    over frame i-1, bin by bin.
    """
    env = np.zeros(series.n_frames)
    prev = None
    for i in range(series.n_frames):
        mags = magnitude_spectrum(series.frames[i], series.sample_rate).magnitudes
        if prev is not None:
            env[i] = np.maximum(mags - prev, 0.0).sum()
        prev = mags
    return env


def beat_histogram(envelope: np.ndarray, frame_rate: float,
                   bpm_min: float = BPM_MIN,
                   bpm_max: float = BPM_MAX) -> tuple[np.ndarray, np.ndarray]:
    """Autocorrelation of an onset envelope over the tempo lag range.

    Returns (lags, values) where lag L scores sum(e[i] * e[i+L]) and the
    lags cover bpm_max down to bpm_min, clipped to lags the envelope can
    support. Empty arrays mean the envelope is too short for any lag.
    """
    envelope = np.asarray(envelope, dtype=np.float64)
    lag_min = max(1, int(np.ceil(60.0 * frame_rate / bpm_max)))
    lag_max = int(np.floor(60.0 * frame_rate / bpm_min))
    lag_max = min(lag_max, envelope.size - 1)
    if lag_max < lag_min:
        return np.array([], dtype=np.int64), np.array([])
    lags = np.arange(lag_min, lag_max + 1)
    values = np.array([np.dot(envelope[:-lag], envelope[lag:]) for lag in lags])
    return lags, values


def _peak_tempo(lags: np.ndarray, values: np.ndarray,
                frame_rate: float) -> tuple[float, float]:
    """(BPM of the strongest lag, its histogram value).

    When the half-period region scores within 75% of the raw argmax the
    peak moves there: a periodic envelope always supports its
    fundamental at least as strongly as the doubled period, so this
    keeps grid drift from flipping the estimate an octave down. The
    final lag is refined by parabolic interpolation when interior and
    the BPM is clamped to the tempo range.
    """
    best = int(np.argmax(values))
    if float(values[best]) <= 0.0:
        return 0.0, 0.0
    lag_min = int(lags[0])
    moved = True
    while moved:
        moved = False
        for divisor in (2, 3):
            fraction = lags[best] / divisor
            if fraction < lag_min:
                continue
            lo = max(0, int(np.floor(fraction)) - 1 - lag_min)
            hi = min(values.size - 1, int(np.ceil(fraction)) + 1 - lag_min)
            if hi < lo or hi >= best:
                continue
            region = lo + int(np.argmax(values[lo:hi + 1]))
            if values[region] >= 0.75 * values[best]:
                best = region
                moved = True
                break
    peak_value = float(values[best])
    lag = float(lags[best])
    if 0 < best < values.size - 1:
        left, mid, right = values[best - 1], values[best], values[best + 1]
        denom = left - 2.0 * mid + right
        if denom < 0.0:
            shift = 0.5 * (left - right) / denom
            lag += float(np.clip(shift, -0.5, 0.5))
    bpm = 60.0 * frame_rate / lag
    return float(np.clip(bpm, BPM_MIN, BPM_MAX)), peak_value


def beat_series(envelope: np.ndarray, frame_rate: float,
                window_s: float = BEAT_WINDOW_S,
                hop_s: float = BEAT_HOP_S) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-window beat quantities of an onset envelope.

    Returns (strongest_beat, beat_strength, beat_sum) series, one value
    per beat window. strongest_beat is the peak tempo in BPM,
    beat_strength the peak's share of the histogram sum, beat_sum the
    histogram sum. Windows whose histogram is empty or all-zero yield
    zeros. Envelopes shorter than one window form a single whole-length
    window.
    """
    envelope = np.asarray(envelope, dtype=np.float64)
    window_len = max(2, int(round(window_s * frame_rate)))
    hop_len = max(1, int(round(hop_s * frame_rate)))
    if envelope.size <= window_len:
        starts = [0]
        window_len = envelope.size
    else:
        n_windows = (envelope.size - window_len) // hop_len + 1
        starts = [w * hop_len for w in range(n_windows)]
    strongest = np.zeros(len(starts))
    strength = np.zeros(len(starts))
    total = np.zeros(len(starts))
    for w, start in enumerate(starts):
        lags, values = beat_histogram(envelope[start:start + window_len], frame_rate)
        if lags.size == 0:
            continue
        hist_sum = float(values.sum())
        total[w] = hist_sum
        if hist_sum > 0.0:
            bpm, peak = _peak_tempo(lags, values, frame_rate)
            strongest[w] = bpm
            strength[w] = peak / hist_sum
    return strongest, strength, total


@dataclass(frozen=True)
class BeatFeatures:
    """Summary statistics of the three beat series."""

    strongest_beat: WindowStats
    beat_strength: WindowStats
    beat_sum: WindowStats


def _beat_features_from_frames(series: FrameSeries) -> BeatFeatures:
    envelope = onset_envelope(series)
    strongest, strength, total = beat_series(envelope, series.frame_rate)
    return BeatFeatures(strongest_beat=window_series_stats(strongest),
                        beat_strength=window_series_stats(strength),
                        beat_sum=window_series_stats(total))


def beat_features(clip: AudioClip,
                  config: FramingConfig = DEFAULT_FRAMING) -> BeatFeatures:
    """Beat summary of a clip; needs at least 2 s of signal."""
    if clip.duration_s < 2.0:
        raise ClipTooShortError(
            f"{clip.duration_s:.3f} s clip is too short for beat analysis")
    return _beat_features_from_frames(frame_signal(clip, config))


def _short_time_stats(series: np.ndarray, window_frames: int,
                      window_hop: int, with_derivatives: bool) -> tuple[float, ...]:
    mean, sd = integrate_feature(meanvar_windows(series, window_frames, window_hop))
    if not with_derivatives:
        return mean, sd
    diffs = derivative_series(series)
    dmean, dsd = integrate_feature(meanvar_windows(diffs, window_frames, window_hop))
    return mean, sd, dmean, dsd


def build_feature_vector(clip: AudioClip,
                         config: FramingConfig = DEFAULT_FRAMING) -> FeatureVector:
    """Extract the full track-level feature vector of one clip.

    The clip must supply at least window_frames + 1 analysis frames (the
    derivative series must still fill one texture window) and 2 s of
    signal for the beat analysis.
    """
    frames = frame_signal(clip, config)
    if frames.n_frames < config.window_frames + 1:
        raise ClipTooShortError(
            f"{frames.n_frames} frames < {config.window_frames + 1} needed "
            f"for windowed statistics")
    if clip.duration_s < 2.0:
        raise ClipTooShortError(
            f"{clip.duration_s:.3f} s clip is too short for beat analysis")
    matrix = extract_short_time(frames).values
    column_start = {}
    offset = 0
    for family, width in SHORT_TIME_FAMILIES:
        column_start[family] = offset
        offset += width

    beats = _beat_features_from_frames(frames)
    rms_col = matrix[:, column_start["rms"]]
    low_energy = low_energy_fraction(rms_col, config.window_frames,
                                     config.window_hop_frames)
    window_sources = {
        "low_energy": window_series_stats(low_energy),
        "strongest_beat": beats.strongest_beat,
        "beat_strength": beats.beat_strength,
        "beat_sum": beats.beat_sum,
    }

    values: list[float] = []
    for family, width, has_deriv, source in VECTOR_FAMILIES:
        if source == "window":
            stats = window_sources[family]
            values.extend(stats if has_deriv else stats[:2])
            continue
        start = column_start[family]
        for index in range(width):
            values.extend(_short_time_stats(matrix[:, start + index],
                                            config.window_frames,
                                            config.window_hop_frames,
                                            has_deriv))
    return FeatureVector(values=np.array(values, dtype=np.float64),
                         schema=CONTENT_SCHEMA,
                         track_id=clip.source_id, label=clip.label)
