"""
Short-time Fourier transform and the ``ELSPEC1`` spectrogram file.

File layout (little-endian)::

    b"ELSPEC1"            7-byte magic
    uint32 frames
    uint32 bins
    float32[frames*bins]  row-major values

A YAML sidecar with the same stem carries window, hop, sample rate and any
placement metadata.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window

from echoloc.audio.clip import AudioClip
from echoloc.errors import AudioFormatError, AudioValueError, ErrorCode

SPEC_MAGIC = b"ELSPEC1"
MAGNITUDE_GUARD = 1e-10
DEFAULT_FLOOR_DB = -80.0
_HEADER = len(SPEC_MAGIC) + 8


@dataclass
class Spectrogram:
    values: np.ndarray          # (frames, bins) dB
    frame_hop: int
    window_length: int
    sample_rate: int
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def bins(self) -> int:
        return self.values.shape[1]

    def sidecar(self) -> dict[str, Any]:
        return {
            "window_length": self.window_length,
            "hop": self.frame_hop,
            "sample_rate": self.sample_rate,
            "frames": self.frames,
            "bins": self.bins,
            **self.metadata,
        }


def _check_params(window_length: int, hop: int) -> None:
    if window_length < 2 or window_length & (window_length - 1):
        raise AudioValueError(f"window length {window_length} is not a power of two", ErrorCode.VALIDATION_ERROR)
    if not 0 < hop <= window_length:
        raise AudioValueError(f"hop {hop} must be in (0, {window_length}]", ErrorCode.VALIDATION_ERROR)


def frame_spectra(
    clip: AudioClip | np.ndarray,
    window_length: int = 512,
    hop: int = 160,
    window: str = "hann",
) -> np.ndarray:
    """Complex one-sided spectra, one row per frame.

    There are ``1 + (len - window_length) // hop`` frames.
    """
    _check_params(window_length, hop)
    x = clip.samples if isinstance(clip, AudioClip) else np.asarray(clip, dtype=np.float64)
    if len(x) < window_length:
        raise AudioValueError(
            f"clip of {len(x)} samples is shorter than one window ({window_length})", ErrorCode.TOO_SHORT
        )
    frames = sliding_window_view(x, window_length)[::hop]
    w = get_window(window, window_length, fftbins=True)
    return np.fft.rfft(frames * w, axis=1)


def stft(
    clip: AudioClip,
    window_length: int = 512,
    hop: int = 160,
    window: str = "hann",
    floor_db: float = DEFAULT_FLOOR_DB,
) -> Spectrogram:
    """Log-magnitude STFT, ``20 log10(|X| + 1e-10)`` floored at ``floor_db``."""
    spectra = frame_spectra(clip, window_length, hop, window)
    db = 20.0 * np.log10(np.abs(spectra) + MAGNITUDE_GUARD)
    return Spectrogram(
        values=np.maximum(db, floor_db),
        frame_hop=hop,
        window_length=window_length,
        sample_rate=clip.sample_rate,
    )


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------

def spectrogram_bytes(spec: Spectrogram) -> bytes:
    header = SPEC_MAGIC + np.array([spec.frames, spec.bins], dtype="<u4").tobytes()
    return header + np.ascontiguousarray(spec.values, dtype="<f4").tobytes()


def sidecar_path(path: str | Path) -> Path:
    return Path(path).with_suffix(".yaml")


def parse_spectrogram(data: bytes, source: str = "<bytes>") -> np.ndarray:
    """Decode ``ELSPEC1`` bytes into a ``(frames, bins)`` float32 array."""
    if len(data) < _HEADER or data[: len(SPEC_MAGIC)] != SPEC_MAGIC:
        raise AudioFormatError(f"{source}: not an ELSPEC1 file", ErrorCode.MALFORMED_HEADER)
    frames, bins = (int(v) for v in np.frombuffer(data, dtype="<u4", count=2, offset=len(SPEC_MAGIC)))
    expected = _HEADER + 4 * frames * bins
    if len(data) != expected:
        raise AudioFormatError(
            f"{source}: expected {expected} bytes for {frames}x{bins}, found {len(data)}", ErrorCode.MALFORMED_HEADER
        )
    return np.frombuffer(data, dtype="<f4", offset=_HEADER).reshape(frames, bins).copy()


def write_spectrogram(path: str | Path, spec: Spectrogram) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_bytes(spectrogram_bytes(spec))
    sidecar_path(p).write_text(yaml.safe_dump(spec.sidecar(), sort_keys=True), encoding="utf-8")
    return p


def read_spectrogram(path: str | Path) -> Spectrogram:
    """Read an ``ELSPEC1`` file and its sidecar (if present)."""
    p = Path(path)
    if not p.is_file():
        raise AudioFormatError(f"spectrogram file not found: {p}", ErrorCode.MISSING_FILE)
    values = parse_spectrogram(p.read_bytes(), str(p))
    meta: dict[str, Any] = {}
    side = sidecar_path(p)
    if side.is_file():
        meta = yaml.safe_load(side.read_text(encoding="utf-8")) or {}
    known = {"window_length", "hop", "sample_rate", "frames", "bins"}
    return Spectrogram(
        values=values.astype(np.float64),
        frame_hop=int(meta.get("hop", 0)),
        window_length=int(meta.get("window_length", 2 * (values.shape[1] - 1))),
        sample_rate=int(meta.get("sample_rate", 0)),
        metadata={k: v for k, v in meta.items() if k not in known},
    )
