"""
WAV reading and writing (mono, PCM16 or IEEE float32).

PCM16 scaling: integer ``k`` maps to ``k / 32768``, so -32768 reads as -1.0
and 32767 as 32767/32768. On write, ``+1.0`` maps to 32767.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Literal

import numpy as np
import soundfile as sf

from echoloc.audio.clip import AudioClip
from echoloc.errors import AudioFormatError, AudioValueError, ErrorCode

logger = logging.getLogger(__name__)

BitDepth = Literal["pcm16", "float32"]

PCM16_SCALE = 32768.0
_SUBTYPES = {"pcm16": "PCM_16", "float32": "FLOAT"}


def read_wav(path: str | Path) -> AudioClip:
    """
    Read a mono PCM16 or float32 WAV file.

    Raises
    ------
    AudioFormatError
        ``missing_file``, ``malformed_header`` (not a readable RIFF/WAVE
        file) or ``unsupported_encoding`` (other sample formats, more than
        one channel).
    """
    p = Path(path)
    if not p.is_file():
        raise AudioFormatError(f"WAV file not found: {p}", ErrorCode.MISSING_FILE)
    try:
        info = sf.info(str(p))
    except RuntimeError as e:
        raise AudioFormatError(f"{p}: malformed WAV header ({e})", ErrorCode.MALFORMED_HEADER) from e
    if info.format not in ("WAV", "WAVEX"):
        raise AudioFormatError(f"{p}: not a RIFF/WAVE file ({info.format})", ErrorCode.UNSUPPORTED_ENCODING)
    if info.channels != 1:
        raise AudioFormatError(
            f"{p}: {info.channels} channels, only mono is supported", ErrorCode.UNSUPPORTED_ENCODING
        )
    if info.subtype == "PCM_16":
        data, rate = sf.read(str(p), dtype="int16", always_2d=False)
        samples = data.astype(np.float64) / PCM16_SCALE
    elif info.subtype == "FLOAT":
        data, rate = sf.read(str(p), dtype="float64", always_2d=False)
        samples = data
    else:
        raise AudioFormatError(
            f"{p}: unsupported encoding {info.subtype}; expected PCM_16 or FLOAT", ErrorCode.UNSUPPORTED_ENCODING
        )
    if not np.all(np.isfinite(samples)):
        raise AudioFormatError(f"{p}: non-finite samples", ErrorCode.UNSUPPORTED_ENCODING)
    return AudioClip(samples=samples, sample_rate=int(rate), metadata={"subtype": info.subtype})


def to_pcm16(samples: np.ndarray) -> np.ndarray:
    """Scale [-1, 1] floats to int16 (``+1.0`` saturates to 32767)."""
    return np.clip(np.round(np.asarray(samples) * PCM16_SCALE), -32768, 32767).astype(np.int16)


def write_wav(path: str | Path, clip: AudioClip, bit_depth: BitDepth = "pcm16") -> Path:
    """
    Write ``clip`` as a mono WAV file.

    Raises
    ------
    AudioValueError
        ``clipping`` if any sample is non-finite or outside [-1, 1]; samples
        are never clamped silently.
    """
    if bit_depth not in _SUBTYPES:
        raise AudioFormatError(f"unsupported bit depth {bit_depth!r}", ErrorCode.UNSUPPORTED_ENCODING)
    x = clip.samples
    if not np.all(np.isfinite(x)) or (len(x) and np.max(np.abs(x)) > 1.0):
        raise AudioValueError(
            f"clip exceeds full scale (peak {clip.peak:.4f}); normalize before writing", ErrorCode.CLIPPING
        )
    data = to_pcm16(x) if bit_depth == "pcm16" else x.astype(np.float32)
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    sf.write(str(p), data, clip.sample_rate, subtype=_SUBTYPES[bit_depth], format="WAV")
    logger.debug("Wrote %s (%d samples, %s)", p, len(x), bit_depth)
    return p
