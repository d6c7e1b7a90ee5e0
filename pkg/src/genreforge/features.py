"""Short-time features computed on individual analysis frames.

Each frame is Hann-windowed and zero-padded to the next power of two
before the FFT. Silent frames follow fixed conventions: spectral shape
features, chroma, LPC, and flux are all zero, and mel energies are
floored at 1e-10 before the log so MFCCs stay finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.fft import dct

from .errors import LengthMismatchError
from .schema import LPC_ORDER, N_CHROMA, N_MFCC, N_SHORT_TIME, SHORT_TIME_FAMILIES

LOG_FLOOR = 1e-10
N_MELS = 40
ROLLOFF_FRACTION = 0.85
ENERGY_SUBFRAMES = 10
TUNING_HZ = 440.0


@dataclass(frozen=True)
class Spectrum:
    """Magnitude spectrum of one frame; bin k sits at k * bin_hz."""

    magnitudes: np.ndarray
    bin_hz: float

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(self.magnitudes.size) * self.bin_hz


def next_pow2(n: int) -> int:
    power = 1
    while power < n:
        power <<= 1
    return power


def magnitude_spectrum(frame: np.ndarray, sample_rate: int) -> Spectrum:
    """Hann-window the frame, zero-pad to the next power of two, FFT."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.size < 2:
        raise ValueError("frame must hold at least 2 samples")
    n_fft = next_pow2(frame.size)
    tapered = frame * np.hanning(frame.size)
    mags = np.abs(np.fft.rfft(tapered, n_fft))
    return Spectrum(magnitudes=mags, bin_hz=sample_rate / n_fft)


def time_domain_features(frame: np.ndarray,
                         n_subframes: int = ENERGY_SUBFRAMES) -> dict[str, float]:
    """Energy, RMS, zero-crossing count, and entropy of sub-frame energy.

    Zero crossings count sign changes (strictly negative products of
    adjacent samples). Entropy treats the energies of ``n_subframes``
    equal chunks as a distribution and is measured in bits; a silent
    frame has entropy 0.
    """
    x = np.asarray(frame, dtype=np.float64)
    energy = float(np.dot(x, x))
    rms = math.sqrt(energy / x.size) if x.size else 0.0
    crossings = int(np.count_nonzero(x[:-1] * x[1:] < 0.0))
    entropy = 0.0
    sub_len = x.size // n_subframes
    if sub_len >= 1 and energy > 0.0:
        chunks = x[: sub_len * n_subframes].reshape(n_subframes, sub_len)
        chunk_energy = np.einsum("ij,ij->i", chunks, chunks)
        total = chunk_energy.sum()
        if total > 0.0:
            p = chunk_energy / total
            nonzero = p[p > 0.0]
            entropy = float(-(nonzero * np.log2(nonzero)).sum())
    return {"energy": energy, "rms": rms,
            "zero_crossing": float(crossings), "energy_entropy": entropy}


def spectral_shape(spec: Spectrum,
                   rolloff_fraction: float = ROLLOFF_FRACTION) -> dict[str, float]:
    """Centroid, spread, rolloff, and variability of one spectrum.

    Centroid and spread are the magnitude-weighted mean/sd of bin
    frequency; rolloff is the lowest frequency below which the given
    fraction of total magnitude lies; variability is the population sd
    of the magnitudes. A silent spectrum yields all zeros.
    """
    mags = spec.magnitudes
    total = float(mags.sum())
    if total <= 0.0:
        return {"spectral_centroid": 0.0, "spectral_spread": 0.0,
                "spectral_rolloff": 0.0, "spectral_variability": 0.0}
    freqs = spec.freqs
    centroid = float((freqs * mags).sum() / total)
    spread = math.sqrt(float(((freqs - centroid) ** 2 * mags).sum() / total))
    cumulative = np.cumsum(mags)
    k = int(np.searchsorted(cumulative, rolloff_fraction * total))
    rolloff = float(freqs[min(k, freqs.size - 1)])
    variability = float(mags.std())
    return {"spectral_centroid": centroid, "spectral_spread": spread,
            "spectral_rolloff": rolloff, "spectral_variability": variability}


def spectral_flux(previous: Spectrum, current: Spectrum) -> float:
    """Euclidean distance between L1-normalized magnitude spectra.

    A silent spectrum normalizes to the zero vector.
    """
    a = previous.magnitudes
    b = current.magnitudes
    if a.size != b.size:
        raise LengthMismatchError(f"spectra of {a.size} and {b.size} bins")
    total_a = a.sum()
    total_b = b.sum()
    na = a / total_a if total_a > 0 else np.zeros_like(a)
    nb = b / total_b if total_b > 0 else np.zeros_like(b)
    return float(np.linalg.norm(nb - na))


def hz_to_mel(hz: np.ndarray | float) -> np.ndarray | float:
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel: np.ndarray | float) -> np.ndarray | float:
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


@lru_cache(maxsize=8)
def mel_filterbank(n_bins: int, bin_hz: float, n_mels: int = N_MELS) -> np.ndarray:
    """Triangular filters with edges equally spaced on the mel scale.

    Shape (n_mels, n_bins); filter j rises from edge j to edge j+1 and
    falls to edge j+2, evaluated at the FFT bin frequencies.
    """
    nyquist = (n_bins - 1) * bin_hz
    edges_hz = mel_to_hz(np.linspace(0.0, hz_to_mel(nyquist), n_mels + 2))
    freqs = np.arange(n_bins) * bin_hz
    bank = np.zeros((n_mels, n_bins))
    for j in range(n_mels):
        lower, center, upper = edges_hz[j], edges_hz[j + 1], edges_hz[j + 2]
        rising = (freqs - lower) / (center - lower)
        falling = (upper - freqs) / (upper - center)
        bank[j] = np.maximum(0.0, np.minimum(rising, falling))
    return bank


def mfcc(spec: Spectrum, n_coeffs: int = N_MFCC, n_mels: int = N_MELS) -> np.ndarray:
    """Mel-frequency cepstral coefficients (c0 included).

    Mel filter energies are taken on the power spectrum, floored at
    1e-10, logged, and passed through an orthonormal DCT-II.
    """
    if n_coeffs > n_mels:
        raise ValueError(f"cannot keep {n_coeffs} coefficients from {n_mels} filters")
    mags = spec.magnitudes
    bank = mel_filterbank(mags.size, spec.bin_hz, n_mels)
    energies = bank @ (mags * mags)
    logs = np.log(np.maximum(energies, LOG_FLOOR))
    return dct(logs, type=2, norm="ortho")[:n_coeffs]


def chroma(spec: Spectrum, tuning_hz: float = TUNING_HZ) -> tuple[np.ndarray, float]:
    """12-bin pitch-class magnitude histogram and its population sd.

    Bin k at frequency f maps to pitch class round(12 * log2(f / tuning))
    mod 12 (class 0 is the tuning pitch); the histogram is normalized to
    unit sum when any magnitude is present. Returns (histogram, sd).
    """
    mags = spec.magnitudes
    freqs = spec.freqs
    positive = freqs > 0.0
    classes = np.mod(np.round(12.0 * np.log2(freqs[positive] / tuning_hz))
                     .astype(np.int64), N_CHROMA)
    hist = np.bincount(classes, weights=mags[positive], minlength=N_CHROMA)
    hist = hist.astype(np.float64)[:N_CHROMA]
    total = hist.sum()
    if total > 0.0:
        hist = hist / total
    return hist, float(hist.std())


def pitch_class_of(freq_hz: float, tuning_hz: float = TUNING_HZ) -> int:
    """Pitch class a single frequency falls into (0 = tuning pitch)."""
    return int(round(12.0 * math.log2(freq_hz / tuning_hz))) % N_CHROMA


def lpc(frame: np.ndarray, order: int = LPC_ORDER) -> np.ndarray:
    """Linear prediction coefficients via Levinson-Durbin.

    Coefficients are in predictor form: x[n] is estimated as
    sum_j a[j] * x[n - j - 1], so an AR(1) process with pole 0.9 gives
    a[0] near +0.9. Autocorrelation uses the biased (1/N) estimate.
    A silent frame yields all zeros.
    """
    x = np.asarray(frame, dtype=np.float64)
    if x.size <= order:
        raise ValueError(f"frame of {x.size} cannot fit LPC order {order}")
    n = x.size
    r = np.array([np.dot(x[: n - k], x[k:]) for k in range(order + 1)]) / n
    coeffs = np.zeros(order)
    if r[0] <= 0.0:
        return coeffs
    error = r[0]
    for i in range(1, order + 1):
        reflection = r[i] - np.dot(coeffs[: i - 1], r[i - 1:0:-1])
        reflection /= error
        updated = coeffs.copy()
        updated[i - 1] = reflection
        if i > 1:
            updated[: i - 1] = coeffs[: i - 1] - reflection * coeffs[i - 2::-1]
        coeffs = updated
        error *= 1.0 - reflection * reflection
        if error <= 0.0:
            break
    return coeffs


def compactness(spec: Spectrum) -> float:
    """Sum of |log(m_k) - log(mean of m_{k-1..k+1}))| over interior bins.

    Bins where any of the three involved magnitudes is zero are skipped;
    a silent frame therefore scores 0.
    """
    mags = spec.magnitudes
    if mags.size < 3:
        raise ValueError("compactness needs at least 3 bins")
    prev_m, cur_m, next_m = mags[:-2], mags[1:-1], mags[2:]
    valid = (prev_m > 0.0) & (cur_m > 0.0) & (next_m > 0.0)
    if not valid.any():
        return 0.0
    local_mean = (prev_m[valid] + cur_m[valid] + next_m[valid]) / 3.0
    return float(np.abs(np.log(cur_m[valid]) - np.log(local_mean)).sum())


@dataclass(frozen=True)
class ShortTimeMatrix:
    """Per-frame feature matrix, one row per frame, columns per schema."""

    values: np.ndarray
    frame_rate: float

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]


def short_time_vector(frame: np.ndarray, spec: Spectrum,
                      prev_spec: Spectrum | None) -> np.ndarray:
    """All short-time features of one frame, in schema column order."""
    td = time_domain_features(frame)
    shape = spectral_shape(spec)
    chroma_hist, chroma_sd = chroma(spec)
    flux = spectral_flux(prev_spec, spec) if prev_spec is not None else 0.0
    parts: list[np.ndarray | float] = []
    for family, _width in SHORT_TIME_FAMILIES:
        if family == "compactness":
            parts.append(compactness(spec))
        elif family in td:
            parts.append(td[family])
        elif family == "mfcc":
            parts.append(mfcc(spec))
        elif family == "chroma":
            parts.append(chroma_hist)
        elif family == "chroma_sd":
            parts.append(chroma_sd)
        elif family == "lpc":
            parts.append(lpc(frame))
        elif family == "spectral_flux":
            parts.append(flux)
        else:
            parts.append(shape[family])
    return np.hstack([np.atleast_1d(np.asarray(p, dtype=np.float64))
                      for p in parts])


def extract_short_time(series) -> ShortTimeMatrix:
    """Compute the short-time feature matrix of a framed clip.

    The first frame's spectral flux is 0 by convention. Errors from the
    per-frame features are re-raised with the frame index prepended.
    """
    rows = np.empty((series.n_frames, N_SHORT_TIME), dtype=np.float64)
    prev_spec: Spectrum | None = None
    for i in range(series.n_frames):
        frame = series.frames[i]
        try:
            spec = magnitude_spectrum(frame, series.sample_rate)
            rows[i] = short_time_vector(frame, spec, prev_spec)
        except Exception as exc:
            raise type(exc)(f"frame {i}: {exc}") from exc
        prev_spec = spec
    return ShortTimeMatrix(values=rows, frame_rate=series.frame_rate)
