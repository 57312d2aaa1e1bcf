"""Value types shared by the propagation modules."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterator, Sequence, overload

import numpy as np


@dataclass(frozen=True)
class Subpath:
    """One traced subpath. Vertex 0 is the emitting endpoint."""

    positions: np.ndarray   # (n, 3)
    energy: np.ndarray      # (n,), non-increasing
    length: np.ndarray      # (n,), strictly increasing

    def __len__(self) -> int:
        return len(self.energy)


@dataclass(frozen=True)
class SubpathBatch(Sequence[Subpath]):
    """
    All subpaths grown from one endpoint, stored as padded arrays.

    ``positions[i, k]`` is vertex ``k`` of subpath ``i`` for ``k < count[i]``;
    entries past ``count[i]`` are padding.
    """

    positions: np.ndarray   # (N, K, 3)
    energy: np.ndarray      # (N, K)
    length: np.ndarray      # (N, K)
    count: np.ndarray       # (N,)

    def __len__(self) -> int:
        return len(self.count)

    @overload
    def __getitem__(self, i: int) -> Subpath: ...
    @overload
    def __getitem__(self, i: slice) -> list[Subpath]: ...

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        n = int(self.count[i])
        return Subpath(self.positions[i, :n], self.energy[i, :n], self.length[i, :n])

    @property
    def max_vertices(self) -> int:
        return self.positions.shape[1]


@dataclass(frozen=True)
class Contributions:
    """Connected paths as parallel arrays.

    Iterating yields ``(delay, amplitude)`` pairs. ``bounces`` is the number
    of surface vertices on the full path; ``subpath`` the index of the
    subpath pair the contribution came from.
    """

    delay: np.ndarray
    amplitude: np.ndarray
    bounces: np.ndarray
    subpath: np.ndarray

    def __len__(self) -> int:
        return len(self.delay)

    def __iter__(self) -> Iterator[tuple[float, float]]:
        return iter(zip(self.delay.tolist(), self.amplitude.tolist()))


@dataclass
class ImpulseResponse:
    samples: np.ndarray
    sample_rate: int
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def __len__(self) -> int:
        return len(self.samples)
