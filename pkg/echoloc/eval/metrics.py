"""
Classification metrics and cross-validation summaries.

Conventions:

- Confusion rows are true classes, columns predicted classes.
- A precision or recall with a zero denominator scores 0 and the class is
  listed in ``ClassMetrics.flagged``.
- The macro average runs over classes that occur at all (TP + FP + FN > 0);
  a class that is never predicted and never true does not count.
- Fold spreads are sample standard deviations (n - 1 denominator).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from echoloc.errors import MetricsError

HEADLINE = ("precision", "recall", "f1", "accuracy")


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def tp(self) -> np.ndarray:
        return np.diag(self.counts).copy()

    @property
    def fp(self) -> np.ndarray:
        return self.counts.sum(axis=0) - self.tp

    @property
    def fn(self) -> np.ndarray:
        return self.counts.sum(axis=1) - self.tp


def confusion(preds: Sequence[int], truths: Sequence[int], num_classes: int) -> ConfusionMatrix:
    """
    Raises
    ------
    MetricsError
        Length mismatch, or a label outside ``[0, num_classes)``.
    """
    p = np.asarray(preds, dtype=np.int64).reshape(-1)
    t = np.asarray(truths, dtype=np.int64).reshape(-1)
    if p.shape != t.shape:
        raise MetricsError(f"{p.size} predictions but {t.size} truths")
    if num_classes < 1:
        raise MetricsError(f"num_classes must be >= 1, got {num_classes}")
    if p.size and (min(p.min(), t.min()) < 0 or max(p.max(), t.max()) >= num_classes):
        raise MetricsError(f"labels must lie in [0, {num_classes})")
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ConfusionMatrix(counts)


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros(num.shape, dtype=np.float64)
    np.divide(num, den, out=out, where=den > 0)
    return out


def _f1(precision: np.ndarray | float, recall: np.ndarray | float) -> np.ndarray:
    p = np.asarray(precision, dtype=np.float64)
    r = np.asarray(recall, dtype=np.float64)
    return _ratio(2.0 * p * r, p + r)


@dataclass
class ClassMetrics:
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    macro_precision: float
    macro_recall: float
    macro_f1: float
    micro_precision: float
    micro_recall: float
    micro_f1: float
    accuracy: float
    flagged: list[int] = field(default_factory=list)

    def summary(self) -> dict[str, float]:
        """Headline (macro) numbers."""
        return {
            "precision": self.macro_precision,
            "recall": self.macro_recall,
            "f1": self.macro_f1,
            "accuracy": self.accuracy,
        }


def metrics(cm: ConfusionMatrix) -> ClassMetrics:
    """Per-class, macro and micro precision/recall/F1 plus accuracy."""
    if cm.total <= 0:
        raise MetricsError("confusion matrix is empty")
    tp, fp, fn = cm.tp, cm.fp, cm.fn
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    f1 = _f1(precision, recall)
    flagged = [int(c) for c in np.flatnonzero((tp + fp == 0) | (tp + fn == 0))]
    present = (tp + fp + fn) > 0
    if not present.any():
        present = np.ones_like(present)

    micro_p = float(_ratio(np.array(tp.sum()), np.array(tp.sum() + fp.sum())))
    micro_r = float(_ratio(np.array(tp.sum()), np.array(tp.sum() + fn.sum())))
    return ClassMetrics(
        precision=precision,
        recall=recall,
        f1=f1,
        support=tp + fn,
        macro_precision=float(precision[present].mean()),
        macro_recall=float(recall[present].mean()),
        macro_f1=float(f1[present].mean()),
        micro_precision=micro_p,
        micro_recall=micro_r,
        micro_f1=float(_f1(micro_p, micro_r)),
        accuracy=float(tp.sum() / cm.total),
        flagged=flagged,
    )


@dataclass(frozen=True)
class CVSummary:
    """Mean and sample standard deviation per metric across folds."""

    folds: int
    mean: dict[str, float]
    std: dict[str, float]

    def rows(self) -> list[dict[str, float | str]]:
        return [{"metric": k, "mean": self.mean[k], "std": self.std[k]} for k in self.mean]


def cv_summary(per_fold: Sequence[ClassMetrics | Mapping[str, float]], k: int | None = None) -> CVSummary:
    """
    Raises
    ------
    MetricsError
        Fewer than two folds, or ``k`` disagrees with the number of results.
    """
    k = len(per_fold) if k is None else k
    if k < 2:
        raise MetricsError(f"cross-validation summary needs k >= 2, got {k}")
    if len(per_fold) != k:
        raise MetricsError(f"expected {k} fold results, got {len(per_fold)}")
    rows = [m.summary() if isinstance(m, ClassMetrics) else dict(m) for m in per_fold]
    keys = [key for key in rows[0] if all(key in r for r in rows)]
    values = {key: np.array([r[key] for r in rows], dtype=np.float64) for key in keys}
    return CVSummary(
        folds=k,
        mean={key: float(v.mean()) for key, v in values.items()},
        std={key: float(v.std(ddof=1)) for key, v in values.items()},
    )
