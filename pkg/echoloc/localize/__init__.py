"""Spectrogram-based region classifier and coordinate regressor."""

from echoloc.localize.features import block_average, feature_stats, load_features, standardize
from echoloc.localize.network import (
    FeatureStats,
    Model,
    Network,
    argmax_class,
    backward,
    forward,
    loss,
    loss_and_gradients,
)
from echoloc.localize.serialize import MODEL_MAGIC, load_model, save_model
from echoloc.localize.train import (
    TrainReport,
    cross_validate,
    evaluate,
    fit,
    parameter_checksum,
    predict_region,
    predict_xy,
    train,
)

__all__ = [
    "MODEL_MAGIC",
    "FeatureStats",
    "Model",
    "Network",
    "TrainReport",
    "argmax_class",
    "backward",
    "block_average",
    "cross_validate",
    "evaluate",
    "feature_stats",
    "fit",
    "forward",
    "load_features",
    "load_model",
    "loss",
    "loss_and_gradients",
    "parameter_checksum",
    "predict_region",
    "predict_xy",
    "save_model",
    "standardize",
    "train",
]
