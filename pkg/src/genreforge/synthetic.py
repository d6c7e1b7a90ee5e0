"""Seeded synthetic fixtures: test signals and separable feature sets.

Everything here is deterministic given its arguments, so fixtures can be
regenerated inside tests and CLIs without shipping binary data.
"""

from __future__ import annotations

import numpy as np

from .audio import AudioClip, CANONICAL_RATE
from .schema import CONTENT_SCHEMA, FeatureSchema


def sine_clip(freq_hz: float, duration_s: float,
              sample_rate: int = CANONICAL_RATE, amplitude: float = 0.5,
              label: str | None = None, source_id: str = "sine") -> AudioClip:
    t = np.arange(int(round(duration_s * sample_rate))) / sample_rate
    return AudioClip(samples=amplitude * np.sin(2.0 * np.pi * freq_hz * t),
                     sample_rate=sample_rate, label=label, source_id=source_id)


def chord_clip(freqs_hz, duration_s: float, sample_rate: int = CANONICAL_RATE,
               amplitude: float = 0.5, label: str | None = None,
               source_id: str = "chord") -> AudioClip:
    """Equal-amplitude sum of sines, normalized to the given peak."""
    t = np.arange(int(round(duration_s * sample_rate))) / sample_rate
    signal = np.zeros_like(t)
    for freq in freqs_hz:
        signal += np.sin(2.0 * np.pi * freq * t)
    peak = np.abs(signal).max()
    if peak > 0:
        signal = amplitude * signal / peak
    return AudioClip(samples=signal, sample_rate=sample_rate, label=label,
                     source_id=source_id)


def click_track(bpm: float, duration_s: float,
                sample_rate: int = CANONICAL_RATE, amplitude: float = 0.9,
                click_ms: float = 10.0, label: str | None = None,
                source_id: str = "clicks") -> AudioClip:
    """Silence with an exponentially decaying click at every beat."""
    n = int(round(duration_s * sample_rate))
    signal = np.zeros(n)
    period = 60.0 / bpm * sample_rate
    click_len = max(1, int(click_ms * sample_rate / 1000.0))
    decay = np.exp(-np.arange(click_len) / (0.002 * sample_rate))
    start = 0.0
    while int(start) < n:
        begin = int(start)
        end = min(n, begin + click_len)
        signal[begin:end] += amplitude * decay[: end - begin]
        start += period
    return AudioClip(samples=np.clip(signal, -1.0, 1.0),
                     sample_rate=sample_rate, label=label, source_id=source_id)


def textured_clip(seed: int, duration_s: float = 3.0,
                  sample_rate: int = CANONICAL_RATE,
                  label: str | None = None,
                  source_id: str = "textured") -> AudioClip:
    """Noisy multi-tone signal with an amplitude wobble; good general
    fixture because nothing about it is degenerate."""
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * sample_rate))
    t = np.arange(n) / sample_rate
    signal = np.zeros(n)
    for _ in range(4):
        freq = rng.uniform(80.0, 4000.0)
        signal += rng.uniform(0.1, 0.4) * np.sin(2.0 * np.pi * freq * t
                                                 + rng.uniform(0.0, 2 * np.pi))
    signal += 0.05 * rng.standard_normal(n)
    signal *= 0.6 + 0.4 * np.sin(2.0 * np.pi * 1.5 * t)
    peak = np.abs(signal).max()
    return AudioClip(samples=0.8 * signal / peak, sample_rate=sample_rate,
                     label=label, source_id=source_id)


def feature_dataset(n_per_class: int = 100, n_classes: int = 3,
                    n_informative: int = 30, separation: float = 4.0,
                    seed: int = 0,
                    schema: FeatureSchema = CONTENT_SCHEMA
                    ) -> tuple[np.ndarray, np.ndarray, list[str], FeatureSchema]:
    """Gaussian class blobs on the first ``n_informative`` components.

    Informative component j separates classes by assigning class
    ``j % n_classes`` a mean of ``separation``; the remaining components
    are pure N(0, 1) noise. Returns (matrix, labels, track_ids, schema).
    """
    if n_informative > len(schema):
        raise ValueError("more informative components than schema width")
    rng = np.random.default_rng(seed)
    n = n_per_class * n_classes
    X = rng.standard_normal((n, len(schema)))
    labels = np.repeat([f"class_{c}" for c in range(n_classes)], n_per_class)
    for j in range(n_informative):
        boosted = j % n_classes
        mask = labels == f"class_{boosted}"
        X[mask, j] += separation
    order = rng.permutation(n)
    X = X[order]
    labels = labels[order]
    track_ids = [f"synth{i:04d}" for i in range(n)]
    return X, labels, track_ids, schema
