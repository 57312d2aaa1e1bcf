"""Coordinate regression error and the leniency-radius accuracy curve."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from echoloc.errors import MetricsError


@dataclass(frozen=True)
class RegressionError:
    mse: float                  # over samples and both coordinates
    distances: np.ndarray       # per-sample Euclidean error, metres

    def summary(self) -> dict[str, float]:
        d = self.distances
        return {
            "mse": self.mse,
            "mean_distance": float(d.mean()) if d.size else 0.0,
            "median_distance": float(np.median(d)) if d.size else 0.0,
        }


@dataclass(frozen=True)
class LeniencyCurve:
    radii: np.ndarray
    accuracy: np.ndarray


def _pairs(values) -> np.ndarray:
    a = np.asarray(values, dtype=np.float64)
    if a.size == 0:
        return a.reshape(0, 2)
    if a.ndim != 2 or a.shape[1] != 2:
        raise MetricsError(f"expected (x, y) pairs, got shape {a.shape}")
    return a


def regression_error(preds, truths) -> RegressionError:
    p, t = _pairs(preds), _pairs(truths)
    if p.shape != t.shape:
        raise MetricsError(f"{p.shape[0]} predictions but {t.shape[0]} truths")
    diff = p - t
    mse = float(np.mean(diff**2)) if diff.size else 0.0
    return RegressionError(mse=mse, distances=np.hypot(diff[:, 0], diff[:, 1]))


def leniency_curve(distances, radii) -> LeniencyCurve:
    """
    Fraction of ``distances`` within each radius (``d <= r``).

    Raises
    ------
    MetricsError
        Radii negative or not ascending, or no distances.
    """
    d = np.sort(np.asarray(distances, dtype=np.float64).reshape(-1))
    r = np.asarray(radii, dtype=np.float64).reshape(-1)
    if d.size == 0:
        raise MetricsError("no distances")
    if r.size and (r.min() < 0 or np.any(np.diff(r) < 0)):
        raise MetricsError("radii must be non-negative and ascending")
    return LeniencyCurve(radii=r, accuracy=np.searchsorted(d, r, side="right") / d.size)


def default_radii(distances, step: float = 0.1) -> np.ndarray:
    """``0, step, ...`` up to the first multiple of ``step`` covering every distance."""
    top = float(np.max(distances)) if np.size(distances) else 0.0
    radii = np.arange(int(np.ceil(top / step)) + 1) * step
    radii[-1] = max(radii[-1], top)
    return radii


def radius_at_accuracy(curve: LeniencyCurve, level: float = 0.5) -> float | None:
    """Smallest radius whose accuracy reaches ``level`` (None if never)."""
    hit = np.flatnonzero(curve.accuracy >= level)
    return float(curve.radii[hit[0]]) if hit.size else None
