"""Feature tensors: fixed-shape, standardized spectrogram images."""

from __future__ import annotations

import hashlib
import logging
from typing import Sequence

import numpy as np

from echoloc.audio.spectrogram import Spectrogram, read_spectrogram
from echoloc.dataset.manifest import DatasetManifest, ManifestEntry
from echoloc.errors import DatasetError, ErrorCode
from echoloc.localize.network import FeatureStats

logger = logging.getLogger(__name__)

# std below this is treated as constant input
MIN_STD = 1e-12


def _block_average_axis(values: np.ndarray, size: int, axis: int) -> np.ndarray:
    n = values.shape[axis]
    starts = (np.arange(size) * n) // size
    summed = np.add.reduceat(values, starts, axis=axis)
    stops = np.append(starts[1:], n)
    counts = np.maximum(stops - starts, 1)
    shape = [1, 1]
    shape[axis] = size
    return summed / counts.reshape(shape)


def block_average(values: np.ndarray, shape: Sequence[int]) -> np.ndarray:
    """
    Resample a 2D matrix to ``shape`` by averaging contiguous blocks.

    Output cell ``i`` along an axis of length ``n`` averages input rows
    ``[i*n//size, (i+1)*n//size)``; when the axis is shorter than the target
    the nearest input row is repeated instead.
    """
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 2 or min(x.shape) < 1:
        raise DatasetError(f"cannot resample a matrix of shape {x.shape}", ErrorCode.SHAPE_MISMATCH)
    rows, cols = int(shape[0]), int(shape[1])
    if x.shape[0] != rows:
        x = _block_average_axis(x, rows, 0)
    if x.shape[1] != cols:
        x = _block_average_axis(x, cols, 1)
    return x


def feature_stats(features: np.ndarray, targets: np.ndarray | None = None) -> FeatureStats:
    """Scalar mean/std over all train features; per-axis stats for coordinate targets."""
    std = float(np.std(features))
    stats = FeatureStats(mean=float(np.mean(features)), std=std if std > MIN_STD else 1.0)
    if targets is not None:
        t = np.asarray(targets, dtype=np.float64)
        tstd = np.std(t, axis=0)
        stats.target_mean = [float(v) for v in np.mean(t, axis=0)]
        stats.target_std = [float(v) if v > MIN_STD else 1.0 for v in tstd]
    return stats


def standardize(features: np.ndarray, stats: FeatureStats) -> np.ndarray:
    return (np.asarray(features, dtype=np.float64) - stats.mean) / stats.std


def featurize(spec: Spectrogram | np.ndarray, shape: Sequence[int]) -> np.ndarray:
    values = spec.values if isinstance(spec, Spectrogram) else spec
    return block_average(values, shape)


def load_features(manifest: DatasetManifest, entries: Sequence[ManifestEntry], shape: Sequence[int]) -> np.ndarray:
    """
    Read, checksum-verify and resample the spectrograms of ``entries``.

    Raises
    ------
    DatasetError
        A file is missing or no longer matches its recorded checksum.
    """
    out = np.empty((len(entries), int(shape[0]), int(shape[1])))
    for k, entry in enumerate(entries):
        path = manifest.resolve(entry)
        if not path.is_file():
            raise DatasetError(f"spectrogram missing: {path}", ErrorCode.MISSING_FILE, placement_index=entry.index)
        if hashlib.sha256(path.read_bytes()).hexdigest() != entry.checksum:
            raise DatasetError(f"checksum mismatch for {path}", ErrorCode.VALIDATION_ERROR, placement_index=entry.index)
        out[k] = featurize(read_spectrogram(path), shape)
    logger.debug("Loaded %d feature tensors", len(entries))
    return out


def coordinates_of(entries: Sequence[ManifestEntry]) -> np.ndarray:
    """Floor-plane ``(x, z)`` of each placement; ``y`` is the vertical axis."""
    return np.array([[e.placement.position.x, e.placement.position.z] for e in entries], dtype=np.float64).reshape(-1, 2)


def targets_for(manifest: DatasetManifest, entries: Sequence[ManifestEntry], task: str) -> np.ndarray:
    if task == "regions":
        return np.array([manifest.class_index(e.label) for e in entries], dtype=np.int64)
    return coordinates_of(entries)
