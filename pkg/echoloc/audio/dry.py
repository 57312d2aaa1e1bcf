"""Dry (anechoic) source material."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy import signal

from echoloc.audio.clip import AudioClip
from echoloc.audio.wavio import read_wav
from echoloc.errors import AudioValueError, ErrorCode
from echoloc.seeding import rng_for


def synth_dry(sample_rate: int = 16_000, duration: float = 1.0, seed: int = 0) -> AudioClip:
    """
    Built-in test signal: a 100 Hz to 6 kHz log sweep (0 to 0.4 s) followed by
    a Hann-shaped noise burst (0.5 to 0.7 s). Broadband content keeps every
    spectrogram bin informative.
    """
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    x = np.zeros(n)

    sweep_n = min(n, int(0.4 * sample_rate))
    f_hi = min(6000.0, 0.45 * sample_rate)
    sweep = signal.chirp(t[:sweep_n], f0=100.0, t1=t[sweep_n - 1], f1=f_hi, method="logarithmic")
    x[:sweep_n] = sweep * signal.windows.tukey(sweep_n, alpha=0.1)

    b0, b1 = int(0.5 * sample_rate), min(n, int(0.7 * sample_rate))
    if b1 > b0:
        noise = rng_for(seed, "dry-noise").standard_normal(b1 - b0)
        x[b0:b1] = 0.5 * noise * signal.windows.hann(b1 - b0)

    x *= 0.5 / np.max(np.abs(x))
    return AudioClip(samples=x, sample_rate=sample_rate, metadata={"source": "synthetic"})


def load_dry(path: str | Path | None, sample_rate: int) -> AudioClip:
    """Read a dry clip from ``path`` or fall back to :func:`synth_dry`.

    Raises
    ------
    AudioValueError
        ``sample_rate_mismatch`` if the file rate differs from ``sample_rate``
        (no resampling is done).
    """
    if path is None:
        return synth_dry(sample_rate)
    clip = read_wav(path)
    if clip.sample_rate != sample_rate:
        raise AudioValueError(
            f"{path}: sample rate {clip.sample_rate} Hz, expected {sample_rate} Hz", ErrorCode.SAMPLE_RATE_MISMATCH
        )
    return clip
