"""
Peak and loudness normalization.

Integrated loudness follows ITU-R BS.1770-4 (K-weighting, 400 ms blocks with
75% overlap, -70 LUFS absolute gate, -10 LU relative gate) as implemented by
``pyloudnorm``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import pyloudnorm as pyln

from echoloc.audio.clip import AudioClip
from echoloc.errors import AudioValueError, ErrorCode

logger = logging.getLogger(__name__)

SUPPORTED_RATES = (16_000, 44_100, 48_000)
BLOCK_SECONDS = 0.400
ABSOLUTE_GATE_LUFS = -70.0
SILENCE_PEAK = 1e-12
MAX_GAIN_ITERATIONS = 3
LOUDNESS_TOLERANCE = 0.1


@dataclass(frozen=True)
class Loudness:
    """Integrated loudness; ``integrated_lufs`` is ``None`` below the gate."""

    integrated_lufs: float | None

    @property
    def below_gate(self) -> bool:
        return self.integrated_lufs is None

    def __str__(self) -> str:
        return "below gate" if self.below_gate else f"{self.integrated_lufs:.2f} LUFS"


BELOW_GATE = Loudness(None)


def peak_normalize(clip: AudioClip, target_db: float = -1.0) -> AudioClip:
    """Remove the DC offset, then scale so the peak is ``10 ** (target_db / 20)``.

    Raises
    ------
    AudioValueError
        ``silent_input`` if nothing is left after DC removal.
    """
    centered = clip.samples - np.mean(clip.samples) if len(clip.samples) else clip.samples
    peak = float(np.max(np.abs(centered))) if len(centered) else 0.0
    if peak < SILENCE_PEAK:
        raise AudioValueError("cannot peak-normalize a silent clip", ErrorCode.SILENT_INPUT)
    gain = 10.0 ** (target_db / 20.0) / peak
    return clip.with_samples(centered * gain, peak_gain=gain)


def measure_lufs(clip: AudioClip) -> Loudness:
    """
    Integrated BS.1770 loudness of a mono clip.

    Raises
    ------
    AudioValueError
        ``sample_rate_mismatch`` for rates other than 16, 44.1 or 48 kHz;
        ``too_short`` for clips shorter than one 400 ms block.
    """
    if clip.sample_rate not in SUPPORTED_RATES:
        raise AudioValueError(
            f"loudness metering supports {SUPPORTED_RATES} Hz, got {clip.sample_rate}",
            ErrorCode.SAMPLE_RATE_MISMATCH,
        )
    if len(clip.samples) < int(round(BLOCK_SECONDS * clip.sample_rate)):
        raise AudioValueError(
            f"clip of {clip.duration:.3f} s is shorter than one {BLOCK_SECONDS} s block", ErrorCode.TOO_SHORT
        )
    meter = pyln.Meter(clip.sample_rate, block_size=BLOCK_SECONDS)
    with warnings.catch_warnings(), np.errstate(divide="ignore", invalid="ignore"):
        warnings.simplefilter("ignore")
        value = float(meter.integrated_loudness(clip.samples))
    if not np.isfinite(value) or value < ABSOLUTE_GATE_LUFS:
        return BELOW_GATE
    return Loudness(value)


def loudness_normalize(clip: AudioClip, target_lufs: float = -15.0) -> AudioClip:
    """
    Apply one scalar gain so the clip measures ``target_lufs`` (+/- 0.1 LU).

    Gating depends on level, so the gain is refined up to three times. The
    accumulated gain is stored as ``metadata["loudness_gain"]``.

    Raises
    ------
    AudioValueError
        ``below_gate`` for inputs with no gated blocks; ``clipping`` if the
        required gain would push the peak above full scale;
        ``loudness_unconverged`` if the last measurement is still outside
        the tolerance.
    """
    measured = measure_lufs(clip)
    if measured.below_gate:
        raise AudioValueError("clip is below the loudness gate", ErrorCode.BELOW_GATE)
    gain = 1.0
    current = measured.integrated_lufs
    for _ in range(MAX_GAIN_ITERATIONS):
        if abs(current - target_lufs) <= LOUDNESS_TOLERANCE / 10:
            break
        step = 10.0 ** ((target_lufs - current) / 20.0)
        candidate = gain * step
        if clip.peak * candidate > 1.0:
            raise AudioValueError(
                f"reaching {target_lufs} LUFS needs gain {candidate:.3f}, which clips (peak {clip.peak:.3f})",
                ErrorCode.CLIPPING,
            )
        gain = candidate
        remeasured = measure_lufs(clip.with_samples(clip.samples * gain))
        if remeasured.below_gate:
            raise AudioValueError("clip fell below the loudness gate", ErrorCode.BELOW_GATE)
        current = remeasured.integrated_lufs
    if abs(current - target_lufs) > LOUDNESS_TOLERANCE:
        raise AudioValueError(
            f"loudness {current:.2f} LUFS after {MAX_GAIN_ITERATIONS} gain steps misses {target_lufs} LUFS",
            ErrorCode.LOUDNESS_UNCONVERGED,
        )
    logger.debug("Loudness %.2f -> %.2f LUFS (gain %.4f)", measured.integrated_lufs, current, gain)
    return clip.with_samples(clip.samples * gain, loudness_gain=gain, loudness_lufs=current)
