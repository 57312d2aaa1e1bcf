"""Energy decay analysis: Schroeder backward integration and RT60."""

from __future__ import annotations

import numpy as np
from scipy import stats

from echoloc.errors import ErrorCode, PropagationError
from echoloc.propagation.types import ImpulseResponse


def schroeder_curve(ir: ImpulseResponse | np.ndarray) -> np.ndarray:
    """
    Backward-integrated energy in dB, 0 dB at the first sample.

    Samples after the last non-zero sample are ``-inf``. The curve is
    non-increasing by construction.

    Raises
    ------
    PropagationError
        ``undefined_decay`` for an empty or all-zero response.
    """
    x = ir.samples if isinstance(ir, ImpulseResponse) else np.asarray(ir, dtype=np.float64)
    energy = np.square(x, dtype=np.float64)
    if len(energy) == 0 or not np.any(energy > 0):
        raise PropagationError("impulse response has no energy", ErrorCode.UNDEFINED_DECAY)
    edc = np.cumsum(energy[::-1])[::-1]
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(edc / edc[0])


def reverberation_time(
    ir: ImpulseResponse,
    decay_db: tuple[float, float] = (-5.0, -25.0),
) -> float:
    """RT60 from a least-squares line fit on the Schroeder curve.

    The fit covers the samples between the two ``decay_db`` levels and is
    extrapolated to 60 dB (T20 with the default range).

    Raises
    ------
    PropagationError
        ``undefined_decay`` if the curve never reaches the lower level.
    """
    curve = schroeder_curve(ir)
    upper, lower = max(decay_db), min(decay_db)
    mask = (curve <= upper) & (curve >= lower)
    if np.count_nonzero(mask) < 2 or curve[-1] > lower:
        raise PropagationError(f"decay does not reach {lower} dB", ErrorCode.UNDEFINED_DECAY)
    t = np.arange(len(curve))[mask] / ir.sample_rate
    slope = stats.linregress(t, curve[mask]).slope
    if slope >= 0:
        raise PropagationError("decay curve is flat", ErrorCode.UNDEFINED_DECAY)
    return float(-60.0 / slope)
