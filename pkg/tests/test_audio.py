"""WAV loading, canonicalization, and frame segmentation."""

import struct
import wave

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genreforge.audio import (
    AudioClip,
    CANONICAL_RATE,
    FramingConfig,
    frame_count,
    frame_signal,
    load_wav,
    make_framing,
    write_wav,
)
from genreforge.errors import (
    DegenerateConfigError,
    EmptyAudioError,
    SignalTooShortError,
    UnreadableFileError,
    UnsupportedEncodingError,
)


def _write_pcm(path, samples_int, sample_rate, sampwidth, n_channels=1):
    """Write raw integer samples with the stdlib, no float scaling."""
    with wave.open(str(path), "wb") as handle:
        handle.setnchannels(n_channels)
        handle.setsampwidth(sampwidth)
        handle.setframerate(sample_rate)
        if sampwidth == 1:
            payload = np.asarray(samples_int, dtype=np.uint8).tobytes()
        else:
            payload = np.asarray(samples_int, dtype="<i2").tobytes()
        handle.writeframes(payload)


class TestLoadWav:
    def test_silence_decodes_to_zeros(self, tmp_path):
        path = tmp_path / "silence.wav"
        _write_pcm(path, np.zeros(22050, dtype=np.int16), 22050, 2)
        clip = load_wav(path)
        assert clip.sample_rate == CANONICAL_RATE
        assert clip.samples.shape == (22050,)
        assert np.all(clip.samples == 0.0)
        assert clip.source_id == "silence"

    def test_16bit_scaling_is_1_over_32768(self, tmp_path):
        path = tmp_path / "vals.wav"
        _write_pcm(path, [-32768, -1, 0, 1, 16384, 32767], 22050, 2)
        clip = load_wav(path)
        expected = np.array([-32768, -1, 0, 1, 16384, 32767]) / 32768.0
        np.testing.assert_array_equal(clip.samples, expected)

    def test_8bit_scaling(self, tmp_path):
        path = tmp_path / "u8.wav"
        _write_pcm(path, [0, 128, 192, 255], 22050, 1)
        clip = load_wav(path)
        expected = (np.array([0, 128, 192, 255]) - 128.0) / 128.0
        np.testing.assert_array_equal(clip.samples, expected)

    def test_sine_roundtrip_within_quantization(self, tmp_path):
        t = np.arange(22050) / 22050.0
        signal = 0.5 * np.sin(2 * np.pi * 440.0 * t)
        path = tmp_path / "sine.wav"
        write_wav(path, signal, 22050)
        clip = load_wav(path)
        assert clip.samples.shape == signal.shape
        assert np.max(np.abs(clip.samples - signal)) <= 1.0 / 32768.0

    def test_thirty_seconds_at_canonical_rate(self, tmp_path):
        path = tmp_path / "long.wav"
        _write_pcm(path, np.zeros(30 * 22050, dtype=np.int16), 22050, 2)
        assert load_wav(path).samples.size == 661500

    def test_stereo_averages_channels(self, tmp_path):
        left = np.full(100, 16384, dtype=np.int16)
        right = np.full(100, -16384, dtype=np.int16)
        interleaved = np.empty(200, dtype=np.int16)
        interleaved[0::2] = left
        interleaved[1::2] = right
        path = tmp_path / "stereo.wav"
        _write_pcm(path, interleaved, 22050, 2, n_channels=2)
        clip = load_wav(path)
        assert clip.samples.shape == (100,)
        np.testing.assert_array_equal(clip.samples, np.zeros(100))

    def test_resample_matches_linear_interpolation(self, tmp_path):
        src_rate = 11025
        t = np.arange(src_rate) / src_rate
        signal = 0.4 * np.sin(2 * np.pi * 220.0 * t)
        path = tmp_path / "lowrate.wav"
        write_wav(path, signal, src_rate)
        clip = load_wav(path)
        quantized = np.clip(signal, -1, 1)
        quantized = (quantized * 32767.0).round() / 32768.0
        n_out = int(round(quantized.size * CANONICAL_RATE / src_rate))
        positions = np.arange(n_out) * (src_rate / CANONICAL_RATE)
        expected = np.interp(positions, np.arange(quantized.size), quantized)
        np.testing.assert_allclose(clip.samples, expected, rtol=0, atol=1e-15)

    def test_missing_file(self, tmp_path):
        with pytest.raises(UnreadableFileError):
            load_wav(tmp_path / "nope.wav")

    def test_garbage_file(self, tmp_path):
        path = tmp_path / "garbage.wav"
        path.write_bytes(b"this is not audio at all, not even close")
        with pytest.raises(UnreadableFileError):
            load_wav(path)

    def test_zero_samples(self, tmp_path):
        path = tmp_path / "empty.wav"
        _write_pcm(path, np.array([], dtype=np.int16), 22050, 2)
        with pytest.raises(EmptyAudioError):
            load_wav(path)

    def test_non_pcm_format_rejected(self, tmp_path):
        # minimal RIFF/WAVE container with format tag 3 (IEEE float)
        fmt = struct.pack("<HHIIHH", 3, 1, 22050, 22050 * 4, 4, 32)
        data = struct.pack("<f", 0.25)
        payload = (b"WAVE"
                   + b"fmt " + struct.pack("<I", len(fmt)) + fmt
                   + b"data" + struct.pack("<I", len(data)) + data)
        path = tmp_path / "float.wav"
        path.write_bytes(b"RIFF" + struct.pack("<I", len(payload)) + payload)
        with pytest.raises(UnsupportedEncodingError):
            load_wav(path)

    def test_24bit_rejected(self, tmp_path):
        path = tmp_path / "wide.wav"
        with wave.open(str(path), "wb") as handle:
            handle.setnchannels(1)
            handle.setsampwidth(3)
            handle.setframerate(22050)
            handle.writeframes(b"\x00\x00\x00" * 10)
        with pytest.raises(UnsupportedEncodingError):
            load_wav(path)


class TestMakeFraming:
    def test_canonical_geometry(self):
        config = make_framing(22050, 50.0, 0.5, 1.0, 0.5)
        assert config == FramingConfig(1102, 551, 40, 20)

    def test_zero_overlap(self):
        config = make_framing(22050, 50.0, 0.0, 1.0, 0.0)
        assert config.frame_len_samples == 1102
        assert config.hop_samples == 1102
        assert config.window_frames == 20
        assert config.window_hop_frames == 20

    def test_degenerate_frame(self):
        with pytest.raises(DegenerateConfigError):
            make_framing(8000, 0.1, 0.5, 1.0, 0.5)

    def test_full_overlap_is_degenerate(self):
        with pytest.raises(DegenerateConfigError):
            make_framing(22050, 50.0, 1.0, 1.0, 0.5)


class TestFrameSignal:
    def _clip(self, n):
        return AudioClip(samples=np.arange(n, dtype=np.float64),
                         sample_rate=22050)

    def test_two_frame_lengths_with_half_overlap(self):
        config = FramingConfig(4, 2, 2, 1)
        series = frame_signal(self._clip(8), config)
        assert series.n_frames == 3
        np.testing.assert_array_equal(series.frames[0], [0, 1, 2, 3])
        np.testing.assert_array_equal(series.frames[1], [2, 3, 4, 5])
        np.testing.assert_array_equal(series.frames[2], [4, 5, 6, 7])

    def test_thirty_second_track_frame_count(self):
        config = make_framing(22050, 50.0, 0.5, 1.0, 0.5)
        series = frame_signal(self._clip(661500), config)
        assert series.n_frames == 1199
        assert series.n_frames == (661500 - 1102) // 551 + 1

    def test_too_short(self):
        with pytest.raises(SignalTooShortError):
            frame_signal(self._clip(1101), FramingConfig(1102, 551, 40, 20))

    def test_repeat_call_is_identical(self):
        clip = AudioClip(samples=np.random.default_rng(0).standard_normal(5000),
                         sample_rate=22050)
        config = FramingConfig(256, 128, 4, 2)
        a = frame_signal(clip, config)
        b = frame_signal(clip, config)
        np.testing.assert_array_equal(a.frames, b.frames)

    @settings(max_examples=60, deadline=None)
    @given(n=st.integers(1, 400), length=st.integers(1, 50),
           hop=st.integers(1, 20))
    def test_frame_count_formula(self, n, length, hop):
        clip = AudioClip(samples=np.zeros(n), sample_rate=22050)
        config = FramingConfig(length, hop, 2, 1)
        expected = frame_count(n, length, hop)
        if n < length:
            assert expected == 0
            with pytest.raises(SignalTooShortError):
                frame_signal(clip, config)
        else:
            assert expected == (n - length) // hop + 1
            series = frame_signal(clip, config)
            assert series.frames.shape == (expected, length)
