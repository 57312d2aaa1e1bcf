"""Mono audio clip value type."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np


@dataclass
class AudioClip:
    """Mono samples at ``sample_rate``.

    ``metadata`` records processing gains (loudness gain, anti-clip gain) so
    that every transform can be traced or undone.
    """

    samples: np.ndarray
    sample_rate: int
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)

    @property
    def channels(self) -> int:
        return 1

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    @property
    def peak(self) -> float:
        return float(np.max(np.abs(self.samples))) if len(self.samples) else 0.0

    def __len__(self) -> int:
        return len(self.samples)

    def with_samples(self, samples: np.ndarray, **metadata: Any) -> AudioClip:
        """Copy with new samples and extra metadata entries."""
        return replace(self, samples=samples, metadata={**self.metadata, **metadata})
