"""Classification metrics, regression error and leniency curves."""

from echoloc.eval.metrics import ClassMetrics, ConfusionMatrix, CVSummary, confusion, cv_summary, metrics
from echoloc.eval.regression import (
    LeniencyCurve,
    RegressionError,
    default_radii,
    leniency_curve,
    radius_at_accuracy,
    regression_error,
)

__all__ = [
    "CVSummary",
    "ClassMetrics",
    "ConfusionMatrix",
    "LeniencyCurve",
    "RegressionError",
    "confusion",
    "cv_summary",
    "default_radii",
    "leniency_curve",
    "metrics",
    "radius_at_accuracy",
    "regression_error",
]
