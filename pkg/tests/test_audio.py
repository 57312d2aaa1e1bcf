"""
Tests for WAV I/O, the dry signal, normalization and convolution.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
import soundfile as sf

from echoloc.audio.clip import AudioClip
from echoloc.audio.convolve import convolve
from echoloc.audio.dry import load_dry, synth_dry
from echoloc.audio import loudness as loudness_module
from echoloc.audio.loudness import Loudness, loudness_normalize, measure_lufs, peak_normalize
from echoloc.audio.wavio import read_wav, write_wav
from echoloc.errors import AudioFormatError, AudioValueError, ErrorCode
from echoloc.propagation.types import ImpulseResponse

RATE = 16_000


def _sine(amplitude: float, seconds: float = 1.0, freq: float = 1000.0, rate: int = RATE) -> AudioClip:
    t = np.arange(int(seconds * rate)) / rate
    return AudioClip(amplitude * np.sin(2 * np.pi * freq * t), rate)


# ===================================================================
# WAV files
# ===================================================================


class TestWav:
    def test_pcm16_scaling(self, tmp_path: Path):
        clip = AudioClip(np.array([0.0, 0.5, -1.0, 1.0]), RATE)
        clip_back = read_wav(write_wav(tmp_path / "a.wav", clip))
        assert clip_back.sample_rate == RATE
        np.testing.assert_array_equal(clip_back.samples, [0.0, 0.5, -1.0, 32767 / 32768])

    def test_float32_round_trip(self, tmp_path: Path):
        x = np.random.default_rng(0).uniform(-1, 1, 1000)
        back = read_wav(write_wav(tmp_path / "a.wav", AudioClip(x, RATE), bit_depth="float32"))
        np.testing.assert_array_equal(back.samples, x.astype(np.float32).astype(np.float64))

    def test_refuses_to_clip(self, tmp_path: Path):
        with pytest.raises(AudioValueError) as exc:
            write_wav(tmp_path / "a.wav", AudioClip(np.array([0.0, 1.5]), RATE))
        assert exc.value.code == ErrorCode.CLIPPING
        assert not (tmp_path / "a.wav").exists()

    def test_refuses_non_finite(self, tmp_path: Path):
        with pytest.raises(AudioValueError):
            write_wav(tmp_path / "a.wav", AudioClip(np.array([0.0, np.nan]), RATE))

    def test_missing_file(self, tmp_path: Path):
        with pytest.raises(AudioFormatError) as exc:
            read_wav(tmp_path / "none.wav")
        assert exc.value.code == ErrorCode.MISSING_FILE

    def test_garbage_header(self, tmp_path: Path):
        p = tmp_path / "junk.wav"
        p.write_bytes(b"this is not a riff file at all" * 4)
        with pytest.raises(AudioFormatError) as exc:
            read_wav(p)
        assert exc.value.code == ErrorCode.MALFORMED_HEADER

    def test_stereo_rejected(self, tmp_path: Path):
        p = tmp_path / "stereo.wav"
        sf.write(str(p), np.zeros((100, 2)), RATE, subtype="PCM_16")
        with pytest.raises(AudioFormatError) as exc:
            read_wav(p)
        assert exc.value.code == ErrorCode.UNSUPPORTED_ENCODING

    def test_pcm24_rejected(self, tmp_path: Path):
        p = tmp_path / "deep.wav"
        sf.write(str(p), np.zeros(100), RATE, subtype="PCM_24")
        with pytest.raises(AudioFormatError, match="PCM_24") as exc:
            read_wav(p)
        assert exc.value.code == ErrorCode.UNSUPPORTED_ENCODING


# ===================================================================
# Dry signal
# ===================================================================


class TestDry:
    def test_synthetic_signal(self):
        clip = synth_dry(RATE, 1.0, seed=0)
        assert len(clip) == RATE
        assert clip.peak == pytest.approx(0.5)
        assert clip.metadata["source"] == "synthetic"

    def test_synthetic_is_deterministic(self):
        np.testing.assert_array_equal(synth_dry(RATE, seed=3).samples, synth_dry(RATE, seed=3).samples)

    def test_load_none_gives_synthetic(self):
        np.testing.assert_array_equal(load_dry(None, RATE).samples, synth_dry(RATE).samples)

    def test_load_rate_mismatch(self, tmp_path: Path):
        p = write_wav(tmp_path / "dry.wav", _sine(0.5, rate=8000))
        with pytest.raises(AudioValueError) as exc:
            load_dry(p, RATE)
        assert exc.value.code == ErrorCode.SAMPLE_RATE_MISMATCH

    def test_load_file(self, tmp_path: Path):
        p = write_wav(tmp_path / "dry.wav", _sine(0.5))
        assert len(load_dry(p, RATE)) == RATE


# ===================================================================
# Normalization
# ===================================================================


class TestPeakNormalize:
    def test_removes_dc_and_scales(self):
        clip = AudioClip(np.array([1.0, 2.0, 3.0, 2.0]), RATE)
        out = peak_normalize(clip, -6.0)
        assert out.samples.mean() == pytest.approx(0.0)
        assert out.peak == pytest.approx(10 ** (-6.0 / 20))
        assert out.metadata["peak_gain"] == pytest.approx(10 ** (-6.0 / 20))

    def test_silence(self):
        with pytest.raises(AudioValueError) as exc:
            peak_normalize(AudioClip(np.full(100, 0.3), RATE))
        assert exc.value.code == ErrorCode.SILENT_INPUT

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        once = peak_normalize(AudioClip(0.2 + rng.standard_normal(RATE), RATE), -3.0)
        twice = peak_normalize(once, -3.0)
        np.testing.assert_allclose(twice.samples, once.samples, rtol=0, atol=1e-12)


class TestLoudness:
    def test_gain_shifts_loudness(self):
        loud = measure_lufs(_sine(0.4)).integrated_lufs
        quiet = measure_lufs(_sine(0.2)).integrated_lufs
        assert loud - quiet == pytest.approx(20 * np.log10(2), abs=0.01)

    def test_silence_is_below_gate(self):
        assert measure_lufs(AudioClip(np.zeros(RATE), RATE)).below_gate

    def test_unsupported_rate(self):
        with pytest.raises(AudioValueError) as exc:
            measure_lufs(_sine(0.3, rate=22_050))
        assert exc.value.code == ErrorCode.SAMPLE_RATE_MISMATCH

    def test_too_short(self):
        with pytest.raises(AudioValueError) as exc:
            measure_lufs(_sine(0.3, seconds=0.2))
        assert exc.value.code == ErrorCode.TOO_SHORT

    def test_normalize_hits_target(self):
        out = loudness_normalize(_sine(0.1), -15.0)
        assert measure_lufs(out).integrated_lufs == pytest.approx(-15.0, abs=0.1)
        assert out.metadata["loudness_gain"] > 1.0

    def test_normalize_refuses_to_clip(self):
        with pytest.raises(AudioValueError) as exc:
            loudness_normalize(_sine(0.1), 0.0)
        assert exc.value.code == ErrorCode.CLIPPING

    def test_normalize_silence(self):
        with pytest.raises(AudioValueError) as exc:
            loudness_normalize(AudioClip(np.zeros(RATE), RATE))
        assert exc.value.code == ErrorCode.BELOW_GATE

    def test_normalize_reports_missed_target(self, monkeypatch):
        # a meter that ignores gain never reaches the target
        monkeypatch.setattr(loudness_module, "measure_lufs", lambda clip: Loudness(-30.0))
        with pytest.raises(AudioValueError) as exc:
            loudness_normalize(_sine(1e-4), -15.0)
        assert exc.value.code == ErrorCode.LOUDNESS_UNCONVERGED


# ===================================================================
# Convolution
# ===================================================================


class TestConvolve:
    def test_full_length(self):
        dry = _sine(0.3, seconds=0.1)
        ir = ImpulseResponse(np.array([1.0, 0.0, 0.5]), RATE)
        assert len(convolve(dry, ir)) == len(dry) + 2

    def test_delta_is_identity(self):
        dry = _sine(0.3, seconds=0.1)
        out = convolve(dry, ImpulseResponse(np.array([1.0]), RATE), rescale=False)
        np.testing.assert_allclose(out.samples, dry.samples, atol=1e-12)

    def test_delay(self):
        dry = AudioClip(np.array([1.0, 2.0]), RATE)
        ir = np.zeros(4)
        ir[3] = 0.5
        out = convolve(dry, ImpulseResponse(ir, RATE), rescale=False)
        np.testing.assert_allclose(out.samples, [0, 0, 0, 0.5, 1.0], atol=1e-12)

    def test_anti_clip_gain(self):
        dry = _sine(0.9, seconds=0.1)
        out = convolve(dry, ImpulseResponse(np.array([1.0, 1.0]), RATE))
        assert out.peak == pytest.approx(10 ** (-1.0 / 20))
        assert out.metadata["anti_clip_gain"] < 1.0

    def test_quiet_output_not_amplified(self):
        dry = _sine(0.1, seconds=0.1)
        out = convolve(dry, ImpulseResponse(np.array([0.5]), RATE))
        assert out.metadata["anti_clip_gain"] == 1.0

    def test_rate_mismatch(self):
        with pytest.raises(AudioValueError) as exc:
            convolve(_sine(0.3, seconds=0.1), ImpulseResponse(np.array([1.0]), 8000))
        assert exc.value.code == ErrorCode.SAMPLE_RATE_MISMATCH

    def test_empty_input(self):
        with pytest.raises(AudioValueError) as exc:
            convolve(AudioClip(np.zeros(0), RATE), ImpulseResponse(np.array([1.0]), RATE))
        assert exc.value.code == ErrorCode.TOO_SHORT

    def test_matches_direct_convolution(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            dry = AudioClip(rng.uniform(-0.5, 0.5, rng.integers(1, 4097)), RATE)
            ir = ImpulseResponse(rng.uniform(-0.5, 0.5, rng.integers(1, 1025)), RATE)
            out = convolve(dry, ir, rescale=False)
            np.testing.assert_allclose(out.samples, np.convolve(dry.samples, ir.samples), atol=1e-6)

    def test_linear_in_both_inputs(self):
        rng = np.random.default_rng(11)
        a = AudioClip(rng.uniform(-0.5, 0.5, 3000), RATE)
        b = AudioClip(rng.uniform(-0.5, 0.5, 3000), RATE)
        h = ImpulseResponse(rng.uniform(-0.5, 0.5, 700), RATE)
        g = ImpulseResponse(rng.uniform(-0.5, 0.5, 700), RATE)

        summed = convolve(a.with_samples(a.samples + b.samples), h, rescale=False).samples
        separate = convolve(a, h, rescale=False).samples + convolve(b, h, rescale=False).samples
        np.testing.assert_allclose(summed, separate, atol=1e-9)

        summed = convolve(a, ImpulseResponse(h.samples + g.samples, RATE), rescale=False).samples
        separate = convolve(a, h, rescale=False).samples + convolve(a, g, rescale=False).samples
        np.testing.assert_allclose(summed, separate, atol=1e-9)


class TestLoudnessFixpoint:
    @pytest.mark.parametrize("seed", range(5))
    def test_normalize_then_measure(self, seed: int):
        rng = np.random.default_rng(seed)
        clip = AudioClip(rng.uniform(0.01, 0.1) * rng.standard_normal(RATE), RATE)
        out = loudness_normalize(clip, -20.0)
        assert measure_lufs(out).integrated_lufs == pytest.approx(-20.0, abs=0.1)
