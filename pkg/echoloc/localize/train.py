"""
Training: mini-batch SGD with momentum, fold-wise cross-validation.

Every random choice is seeded: weights from ``(seed, "init", name)``,
epoch shuffles from ``(seed, "shuffle", epoch)``. Samples are always ordered
by placement index before shuffling, so the order of entries in the
manifest has no influence on the result.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from echoloc.audio.spectrogram import Spectrogram
from echoloc.config import ModelConfig
from echoloc.dataset.manifest import DatasetManifest, ManifestEntry
from echoloc.errors import DatasetError, ErrorCode, ModelError, TrainingDivergedError
from echoloc.eval.metrics import ClassMetrics, confusion, metrics
from echoloc.eval.regression import RegressionError, regression_error
from echoloc.localize.features import coordinates_of, feature_stats, featurize, load_features, standardize, targets_for
from echoloc.localize.network import FeatureStats, Model, Network, argmax_class, forward, loss_and_gradients
from echoloc.seeding import rng_for

logger = logging.getLogger(__name__)


@dataclass
class TrainReport:
    """Per-epoch training loss (and accuracy, for regions) and held-out metrics for one fold."""

    epoch_loss: list[float] = field(default_factory=list)
    epoch_accuracy: list[float] = field(default_factory=list)
    fold: int | None = None
    val_metrics: ClassMetrics | RegressionError | None = None
    val_indices: list[int] = field(default_factory=list)
    val_predictions: list[Any] = field(default_factory=list)


def parameter_checksum(model: Model | Network) -> str:
    net = model.network if isinstance(model, Model) else model
    h = hashlib.sha256()
    for name, value in net.tensors().items():
        h.update(name.encode("utf-8"))
        h.update(np.ascontiguousarray(value, dtype="<f8").tobytes())
    return h.hexdigest()


def _check_finite(net: Network, epoch: int, batch: int, value: float, config: ModelConfig) -> None:
    bad = [name for name, v in net.named_parameters() if not np.all(np.isfinite(v))]
    if np.isfinite(value) and not bad:
        return
    diagnostics = {
        "epoch": epoch,
        "batch": batch,
        "loss": float(value),
        "learning_rate": config.learning_rate,
        "non_finite_parameters": bad,
    }
    raise TrainingDivergedError(f"training diverged at epoch {epoch}, batch {batch} (loss {value})", diagnostics)


def fit(
    config: ModelConfig,
    features: np.ndarray,
    targets: np.ndarray,
    classes: Sequence[str] = (),
    stats: FeatureStats | None = None,
) -> tuple[Model, TrainReport]:
    """
    Train a model on already standardized ``features`` (N x F x B).

    ``targets`` are class indices (regions) or standardized coordinate
    pairs (coords). Parameters are rounded to float32 after training so a
    saved model reproduces the trained one exactly.

    Raises
    ------
    TrainingDivergedError
        The batch loss or any parameter becomes non-finite.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(targets)
    n = x.shape[0]
    if n == 0:
        raise ModelError("no training samples", ErrorCode.DATASET_ERROR)
    if y.shape[0] != n:
        raise ModelError(f"{n} feature tensors but {y.shape[0]} targets")

    net = Network(config)
    params = dict(net.named_parameters())
    velocity = {name: np.zeros_like(v) for name, v in params.items()}
    report = TrainReport()
    labels = None
    if config.task == "regions":
        labels = y if y.ndim == 1 else np.argmax(y, axis=1)

    for epoch in range(config.epochs):
        order = rng_for(config.seed, "shuffle", epoch).permutation(n)
        total = 0.0
        for b, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start:start + config.batch_size]
            batch_loss, grads = loss_and_gradients(net, x[idx], y[idx])
            for name, g in grads.items():
                velocity[name] = config.momentum * velocity[name] - config.learning_rate * g
                params[name] += velocity[name]
            _check_finite(net, epoch, b, batch_loss, config)
            total += batch_loss * len(idx)
        report.epoch_loss.append(total / n)
        if labels is not None:
            report.epoch_accuracy.append(float(np.mean(np.argmax(net.raw(x), axis=1) == labels)))
            logger.info(
                "Epoch %d/%d: loss %.6f, accuracy %.4f",
                epoch + 1, config.epochs, total / n, report.epoch_accuracy[-1],
            )
        else:
            logger.info("Epoch %d/%d: loss %.6f", epoch + 1, config.epochs, total / n)

    net.round_to_float32()
    return Model(net, list(classes), stats or FeatureStats()), report


# ---------------------------------------------------------------------------
# Prediction
# ---------------------------------------------------------------------------

def _features_for(model: Model, spectrograms: Any) -> np.ndarray:
    x = spectrograms.values if isinstance(spectrograms, Spectrogram) else np.asarray(spectrograms)
    if x.ndim == 2:
        x = featurize(x, model.config.input_shape)
    return standardize(x, model.stats)


def predict_region(model: Model, spectrogram: Any) -> str:
    """
    Most probable region for one spectrogram (or a raw ``[frames x bins]``
    matrix). Ties go to the lowest class index.
    """
    if model.task != "regions":
        raise ModelError(f"model task is {model.task!r}, not 'regions'", ErrorCode.VALIDATION_ERROR)
    prob = forward(model, _features_for(model, spectrogram))
    k = argmax_class(prob)
    return model.classes[k] if k < len(model.classes) else str(k)


def predict_xy(model: Model, spectrogram: Any) -> tuple[float, float]:
    """Predicted floor-plane ``(x, z)`` in scene metres."""
    if model.task != "coords":
        raise ModelError(f"model task is {model.task!r}, not 'coords'", ErrorCode.VALIDATION_ERROR)
    out = forward(model, _features_for(model, spectrogram))
    xy = out * np.asarray(model.stats.target_std) + np.asarray(model.stats.target_mean)
    return float(xy[0]), float(xy[1])


def predict_batch(model: Model, features: np.ndarray) -> list[Any]:
    """Predictions for a batch of resampled, unstandardized feature tensors."""
    out = np.atleast_2d(forward(model, standardize(features, model.stats)))
    if model.task == "regions":
        return [argmax_class(row) for row in out]
    xy = out * np.asarray(model.stats.target_std) + np.asarray(model.stats.target_mean)
    return [(float(a), float(b)) for a, b in xy]


# ---------------------------------------------------------------------------
# Manifest-driven training
# ---------------------------------------------------------------------------

def split_entries(
    manifest: DatasetManifest,
    fold: int | None,
    held_out: DatasetManifest | None = None,
) -> tuple[list[ManifestEntry], list[ManifestEntry]]:
    """Train/validation entries, each ordered by placement index.

    ``fold=None`` trains on every train entry and validates on the test
    split, taken from ``held_out`` when that is given.
    """
    train = sorted(manifest.train_entries, key=lambda e: e.index)
    if fold is None:
        source = held_out if held_out is not None else manifest
        return train, sorted(source.test_entries, key=lambda e: e.index)
    if manifest.folds is None:
        raise DatasetError("manifest has no fold assignment", ErrorCode.VALIDATION_ERROR)
    if not 0 <= fold < manifest.folds:
        raise DatasetError(f"fold {fold} out of range for k={manifest.folds}", ErrorCode.VALIDATION_ERROR)
    return [e for e in train if e.fold != fold], [e for e in train if e.fold == fold]


def evaluate(model: Model, manifest: DatasetManifest, entries: Sequence[ManifestEntry]) -> tuple[Any, list[Any]]:
    """Metrics and predictions of ``model`` on ``entries``."""
    if not entries:
        return None, []
    features = load_features(manifest, entries, model.config.input_shape)
    preds = predict_batch(model, features)
    if model.task == "regions":
        truths = targets_for(manifest, entries, "regions")
        return metrics(confusion(preds, truths, len(model.classes))), preds
    return regression_error(preds, coordinates_of(entries)), preds


def train(
    config: ModelConfig,
    manifest: DatasetManifest,
    fold: int | None,
    *,
    held_out: DatasetManifest | None = None,
) -> tuple[Model, TrainReport]:
    """
    Train on every train entry outside ``fold`` and validate on ``fold``.

    With ``fold=None`` the validation set is the test split of ``held_out``
    (a separately rendered dataset) or, without one, of ``manifest``.

    Standardization statistics come from the training entries only. For
    classification the class count is taken from the manifest.
    """
    if config.task == "regions":
        if manifest.mode != "regions":
            raise DatasetError("classification needs a 'regions' manifest", ErrorCode.VALIDATION_ERROR)
        config = replace(config, num_classes=len(manifest.classes))
    train_entries, val_entries = split_entries(manifest, fold, held_out)
    if not train_entries:
        raise DatasetError("no training entries", ErrorCode.VALIDATION_ERROR)

    raw = load_features(manifest, train_entries, config.input_shape)
    targets = targets_for(manifest, train_entries, config.task)
    stats = feature_stats(raw, targets if config.task == "coords" else None)
    x = standardize(raw, stats)
    if config.task == "coords":
        targets = (targets - np.asarray(stats.target_mean)) / np.asarray(stats.target_std)

    logger.info("Training fold %s on %d samples, validating on %d", fold, len(train_entries), len(val_entries))
    model, report = fit(config, x, targets, manifest.classes if config.task == "regions" else [], stats)
    report.fold = fold
    val_source = held_out if fold is None and held_out is not None else manifest
    report.val_metrics, report.val_predictions = evaluate(model, val_source, val_entries)
    report.val_indices = [e.index for e in val_entries]
    return model, report


def cross_validate(config: ModelConfig, manifest: DatasetManifest) -> list[tuple[Model, TrainReport]]:
    """Train and validate once per fold."""
    if manifest.folds is None:
        raise DatasetError("manifest has no fold assignment", ErrorCode.VALIDATION_ERROR)
    return [train(config, manifest, k) for k in range(manifest.folds)]
