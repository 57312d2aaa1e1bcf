"""Image-source impulse responses for empty axis-aligned boxes."""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from echoloc.config import PropagationConfig
from echoloc.errors import ErrorCode, PropagationError
from echoloc.propagation.tracer import bin_contributions
from echoloc.propagation.types import ImpulseResponse

MAX_ORACLE_ORDER = 4


def _axis_images(x: float, length: float, max_order: int) -> list[tuple[float, int]]:
    """Mirror positions ``(1 - 2p) x + 2 n L`` along one axis with their orders."""
    out = []
    for n in range(-max_order, max_order + 1):
        for p in (0, 1):
            order = abs(2 * n - p)
            if order <= max_order:
                out.append(((1 - 2 * p) * x + 2 * n * length, order))
    return out


def image_sources(
    dims: Sequence[float],
    source: Sequence[float],
    max_order: int,
) -> tuple[np.ndarray, np.ndarray]:
    """All image sources of total reflection order <= ``max_order``.

    Returns ``(positions, orders)`` with shapes ``(M, 3)`` and ``(M,)``.
    The box spans ``[0, dims]``.
    """
    per_axis = [_axis_images(float(source[i]), float(dims[i]), max_order) for i in range(3)]
    positions, orders = [], []
    for (x, ox), (y, oy), (z, oz) in itertools.product(*per_axis):
        if ox + oy + oz <= max_order:
            positions.append((x, y, z))
            orders.append(ox + oy + oz)
    return np.asarray(positions, dtype=np.float64), np.asarray(orders, dtype=np.int64)


def _inside(p: Sequence[float], dims: Sequence[float]) -> bool:
    return all(0.0 <= float(p[i]) <= float(dims[i]) for i in range(3))


def image_source_rir(
    dims: Sequence[float],
    source: Sequence[float],
    receiver: Sequence[float],
    absorption: float,
    max_order: int,
    config: PropagationConfig,
) -> ImpulseResponse:
    """
    Analytic RIR of an empty shoebox ``[0, dims]``.

    Each image contributes ``(1 - absorption) ** order / (4 pi r)`` at delay
    ``r / c``, binned to the nearest sample like :func:`simulate_rir`.

    Raises
    ------
    PropagationError
        If source or receiver lie outside the box or ``max_order`` exceeds 4.
    """
    if not 0 <= max_order <= MAX_ORACLE_ORDER:
        raise PropagationError(
            f"max_order must be in [0, {MAX_ORACLE_ORDER}], got {max_order}", ErrorCode.VALIDATION_ERROR
        )
    if not (_inside(source, dims) and _inside(receiver, dims)):
        raise PropagationError("source and receiver must lie inside the box", ErrorCode.SOURCE_OUTSIDE)
    if np.linalg.norm(np.subtract(source, receiver)) < 1e-3:
        raise PropagationError("source coincides with the receiver", ErrorCode.SOURCE_AT_RECEIVER)

    images, orders = image_sources(dims, source, max_order)
    r = np.linalg.norm(images - np.asarray(receiver, dtype=np.float64), axis=1)
    amp = (1.0 - absorption) ** orders / (4.0 * np.pi * r)
    samples = bin_contributions(r / config.speed_of_sound, amp, config.sample_rate, config.num_samples)
    return ImpulseResponse(
        samples=samples,
        sample_rate=config.sample_rate,
        metadata={
            "source": [float(v) for v in source],
            "receiver": [float(v) for v in receiver],
            "method": "image-source",
            "max_order": max_order,
        },
    )
