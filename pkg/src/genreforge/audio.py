"""WAV ingestion and segmentation into overlapping analysis frames.

Every clip is canonicalized on load: mono (stereo averaged), float64 in
[-1, 1], resampled to 22050 Hz by linear interpolation when needed.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (
    DegenerateConfigError,
    EmptyAudioError,
    SignalTooShortError,
    UnreadableFileError,
    UnsupportedEncodingError,
)

CANONICAL_RATE = 22050


@dataclass(frozen=True)
class AudioClip:
    """A mono audio signal with its sampling rate and provenance."""

    samples: np.ndarray
    sample_rate: int
    label: str | None = None
    source_id: str = ""

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class FramingConfig:
    """Resolved frame/window geometry, all quantities in integer units.

    ``frame_len_samples`` and ``hop_samples`` are in samples;
    ``window_frames`` and ``window_hop_frames`` count analysis frames per
    summarization window.
    """

    frame_len_samples: int
    hop_samples: int
    window_frames: int
    window_hop_frames: int


@dataclass(frozen=True)
class FrameSeries:
    """Overlapping frames of one clip, one row per frame."""

    frames: np.ndarray
    sample_rate: int
    hop_samples: int

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def frame_len(self) -> int:
        return self.frames.shape[1]

    @property
    def frame_rate(self) -> float:
        """Frames per second of signal time."""
        return self.sample_rate / self.hop_samples


def _resample_linear(x: np.ndarray, src_rate: int, dst_rate: int) -> np.ndarray:
    """Resample by linear interpolation onto the destination sample grid."""
    n_out = int(round(x.size * dst_rate / src_rate))
    positions = np.arange(n_out) * (src_rate / dst_rate)
    return np.interp(positions, np.arange(x.size), x)


def load_wav(path: str | Path, label: str | None = None,
             target_rate: int = CANONICAL_RATE) -> AudioClip:
    """Load a PCM WAV file as a canonical mono clip.

    8-bit samples map to (v - 128) / 128, 16-bit to v / 32768; stereo is
    averaged to mono before any resampling.

    Raises UnreadableFileError for missing/garbled files,
    UnsupportedEncodingError for non-PCM payloads or widths other than
    8/16 bit, EmptyAudioError for zero-sample files.
    """
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as handle:
            n_channels = handle.getnchannels()
            sample_width = handle.getsampwidth()
            rate = handle.getframerate()
            raw = handle.readframes(handle.getnframes())
    except wave.Error as exc:
        text = str(exc).lower()
        if "unknown format" in text or "compression" in text:
            raise UnsupportedEncodingError(f"{path}: {exc}") from exc
        raise UnreadableFileError(f"{path}: {exc}") from exc
    except (OSError, EOFError) as exc:
        raise UnreadableFileError(f"{path}: {exc}") from exc

    if n_channels not in (1, 2):
        raise UnsupportedEncodingError(
            f"{path}: {n_channels} channels (only mono/stereo supported)")
    if sample_width == 1:
        data = (np.frombuffer(raw, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
    elif sample_width == 2:
        data = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    else:
        raise UnsupportedEncodingError(
            f"{path}: {8 * sample_width}-bit samples (only 8/16-bit PCM supported)")
    if n_channels == 2:
        data = data.reshape(-1, 2).mean(axis=1)
    if data.size == 0:
        raise EmptyAudioError(f"{path}: no samples")
    if rate != target_rate:
        data = _resample_linear(data, rate, target_rate)
    return AudioClip(samples=data, sample_rate=target_rate, label=label,
                     source_id=path.stem)


def write_wav(path: str | Path, samples: np.ndarray, sample_rate: int) -> None:
    """Write a mono float signal in [-1, 1] as 16-bit PCM."""
    quantized = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    pcm = (quantized * 32767.0).round().astype("<i2")
    with wave.open(str(path), "wb") as handle:
        handle.setnchannels(1)
        handle.setsampwidth(2)
        handle.setframerate(sample_rate)
        handle.writeframes(pcm.tobytes())


def make_framing(sample_rate: int, frame_ms: float, frame_overlap: float,
                 window_s: float, window_overlap: float) -> FramingConfig:
    """Resolve durations and overlap ratios into integer framing geometry.

    frame_len = floor(frame_ms * rate / 1000), hop = floor(frame_len *
    (1 - overlap)); window_frames = round(window_s / hop_duration),
    window_hop likewise floored. Raises DegenerateConfigError whenever a
    resolved count is zero.
    """
    if sample_rate <= 0:
        raise DegenerateConfigError(f"sample_rate={sample_rate}")
    frame_len = int(frame_ms * sample_rate / 1000.0)
    if frame_len <= 0:
        raise DegenerateConfigError(
            f"frame of {frame_ms} ms at {sample_rate} Hz has no samples")
    hop = int(frame_len * (1.0 - frame_overlap))
    if hop <= 0:
        raise DegenerateConfigError(f"frame overlap {frame_overlap} leaves no hop")
    window_frames = int(round(window_s * sample_rate / hop))
    if window_frames <= 0:
        raise DegenerateConfigError(
            f"window of {window_s} s holds no {hop}-sample hops")
    window_hop = int(window_frames * (1.0 - window_overlap))
    if window_hop <= 0:
        raise DegenerateConfigError(f"window overlap {window_overlap} leaves no hop")
    return FramingConfig(frame_len_samples=frame_len, hop_samples=hop,
                         window_frames=window_frames, window_hop_frames=window_hop)


DEFAULT_FRAMING = make_framing(CANONICAL_RATE, 50.0, 0.5, 1.0, 0.5)


def frame_count(n_samples: int, frame_len: int, hop: int) -> int:
    """Number of full frames: floor((N - L) / hop) + 1 for N >= L."""
    if n_samples < frame_len:
        return 0
    return (n_samples - frame_len) // hop + 1


def frame_signal(clip: AudioClip, config: FramingConfig) -> FrameSeries:
    """Cut a clip into overlapping frames; trailing samples that do not
    fill a frame are dropped.

    Raises SignalTooShortError if the clip holds less than one frame.
    """
    length = config.frame_len_samples
    hop = config.hop_samples
    if clip.samples.size < length:
        raise SignalTooShortError(
            f"{clip.samples.size} samples < one {length}-sample frame")
    frames = sliding_window_view(clip.samples, length)[::hop]
    return FrameSeries(frames=frames, sample_rate=clip.sample_rate,
                       hop_samples=hop)
