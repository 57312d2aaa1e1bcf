"""Reverberation by FFT overlap-add convolution."""

from __future__ import annotations

import numpy as np
from scipy import signal

from echoloc.audio.clip import AudioClip
from echoloc.errors import AudioValueError, ErrorCode
from echoloc.propagation.types import ImpulseResponse

ANTI_CLIP_DB = -1.0


def convolve(
    dry: AudioClip,
    ir: ImpulseResponse | AudioClip,
    *,
    rescale: bool = True,
    peak_db: float = ANTI_CLIP_DB,
) -> AudioClip:
    """
    Full linear convolution of ``dry`` with ``ir``.

    The output has ``len(dry) + len(ir) - 1`` samples. With ``rescale`` a
    single attenuation ``min(1, 10 ** (peak_db / 20) / peak)`` is applied and
    recorded as ``metadata["anti_clip_gain"]``.

    Raises
    ------
    AudioValueError
        ``sample_rate_mismatch`` if the two inputs differ in rate.
    """
    if dry.sample_rate != ir.sample_rate:
        raise AudioValueError(
            f"sample rates differ: dry {dry.sample_rate} Hz, ir {ir.sample_rate} Hz",
            ErrorCode.SAMPLE_RATE_MISMATCH,
        )
    h = np.asarray(ir.samples, dtype=np.float64)
    if len(dry.samples) == 0 or len(h) == 0:
        raise AudioValueError("cannot convolve an empty signal", ErrorCode.TOO_SHORT)
    wet = signal.oaconvolve(dry.samples, h, mode="full")
    if not rescale:
        return dry.with_samples(wet)
    peak = float(np.max(np.abs(wet)))
    gain = 1.0 if peak == 0.0 else min(1.0, 10.0 ** (peak_db / 20.0) / peak)
    return dry.with_samples(wet * gain, anti_clip_gain=gain)
