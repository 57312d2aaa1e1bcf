"""
Report writers: CSV tables, the leniency-curve SVG and a YAML summary.

All outputs are byte-reproducible for identical inputs: CSVs use a fixed
float format and line terminator, and the SVG is written with a fixed hash
salt and no creation date.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
import yaml  # noqa: E402

from echoloc.eval.metrics import ClassMetrics, ConfusionMatrix, CVSummary  # noqa: E402
from echoloc.eval.regression import LeniencyCurve, RegressionError, radius_at_accuracy  # noqa: E402

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.6f"

# Published fold means and spreads, listed next to our own numbers.
REFERENCE_ROWS: list[dict[str, Any]] = [
    {"model": "reference CNN", "f1": 0.594, "f1_std": 0.019, "precision": 0.626, "precision_std": 0.031,
     "recall": 0.656, "recall_std": 0.027},
    {"model": "reference AST", "f1": 0.786, "f1_std": 0.014, "precision": 0.812, "precision_std": 0.013,
     "recall": 0.784, "recall_std": 0.015},
]
REFERENCE_RADIUS = 3.4
ACCURACY_LEVEL = 0.5


def write_csv(frame: pd.DataFrame, path: Path, index: bool = False) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=index, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def confusion_frame(cm: ConfusionMatrix, classes: Sequence[str]) -> pd.DataFrame:
    names = list(classes) or [str(i) for i in range(cm.num_classes)]
    frame = pd.DataFrame(cm.counts, index=names, columns=names)
    frame.index.name = "true"
    return frame


def class_metrics_frame(m: ClassMetrics, classes: Sequence[str]) -> pd.DataFrame:
    names = list(classes) or [str(i) for i in range(len(m.f1))]
    rows = [
        {
            "class": name,
            "precision": float(m.precision[i]),
            "recall": float(m.recall[i]),
            "f1": float(m.f1[i]),
            "support": int(m.support[i]),
            "flagged": i in m.flagged,
        }
        for i, name in enumerate(names)
    ]
    rows.append({"class": "macro", "precision": m.macro_precision, "recall": m.macro_recall,
                 "f1": m.macro_f1, "support": int(m.support.sum()), "flagged": False})
    rows.append({"class": "micro", "precision": m.micro_precision, "recall": m.micro_recall,
                 "f1": m.micro_f1, "support": int(m.support.sum()), "flagged": False})
    return pd.DataFrame(rows)


def curve_frame(curve: LeniencyCurve) -> pd.DataFrame:
    return pd.DataFrame({"radius": curve.radii, "accuracy": curve.accuracy})


def write_classification_tables(
    out_dir: str | Path, cm: ConfusionMatrix, m: ClassMetrics, classes: Sequence[str], prefix: str = ""
) -> list[Path]:
    out = Path(out_dir)
    return [
        write_csv(confusion_frame(cm, classes), out / f"{prefix}confusion.csv", index=True),
        write_csv(class_metrics_frame(m, classes), out / f"{prefix}class_metrics.csv"),
    ]


def write_regression_tables(
    out_dir: str | Path, err: RegressionError, curve: LeniencyCurve, prefix: str = ""
) -> list[Path]:
    out = Path(out_dir)
    summary = pd.DataFrame([err.summary()])
    distances = pd.DataFrame({"sample": np.arange(err.distances.size), "distance": err.distances})
    return [
        write_csv(summary, out / f"{prefix}regression.csv"),
        write_csv(distances, out / f"{prefix}distances.csv"),
        write_csv(curve_frame(curve), out / f"{prefix}leniency.csv"),
    ]


def write_cv_table(out_dir: str | Path, summary: CVSummary, fold_rows: Sequence[dict[str, float]]) -> list[Path]:
    out = Path(out_dir)
    folds = pd.DataFrame([{"fold": i, **row} for i, row in enumerate(fold_rows)])
    return [
        write_csv(folds, out / "folds.csv"),
        write_csv(pd.DataFrame(summary.rows()), out / "cv_summary.csv"),
    ]


def plot_leniency(
    curve: LeniencyCurve,
    path: str | Path,
    level: float = ACCURACY_LEVEL,
    reference_radius: float | None = REFERENCE_RADIUS,
) -> Path:
    """Accuracy against leniency radius, with the ``level`` read-out marked."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({"svg.hashsalt": "echoloc", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        try:
            ax.plot(curve.radii, curve.accuracy, color="tab:blue", label="accuracy")
            ax.axhline(level, color="grey", linestyle=":", linewidth=1)
            r = radius_at_accuracy(curve, level)
            if r is not None:
                ax.axvline(r, color="tab:blue", linestyle="--", linewidth=1, label=f"{level:.0%} at {r:.2f} m")
            if reference_radius is not None:
                ax.axvline(reference_radius, color="tab:orange", linestyle="--", linewidth=1,
                           label=f"reference {reference_radius:.1f} m")
            ax.set_xlabel("radius (m)")
            ax.set_ylabel("accuracy")
            ax.set_ylim(0.0, 1.02)
            ax.set_xlim(left=0.0)
            ax.grid(True, alpha=0.3)
            ax.legend(loc="lower right")
            fig.savefig(p, format="svg", metadata={"Date": None}, bbox_inches="tight")
        finally:
            plt.close(fig)
    return p


def write_summary(out_dir: str | Path, document: dict[str, Any], name: str = "report.yaml") -> Path:
    p = Path(out_dir) / name
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(yaml.safe_dump(document, sort_keys=True), encoding="utf-8")
    return p


def report_document(
    summary: CVSummary | None,
    curve: LeniencyCurve | None,
    flagged: Sequence[str] = (),
    level: float = ACCURACY_LEVEL,
) -> dict[str, Any]:
    """Structured summary: our fold statistics next to the reference rows."""
    doc: dict[str, Any] = {"reference": {"classification": REFERENCE_ROWS, "radius_at_half_accuracy": REFERENCE_RADIUS}}
    if summary is not None:
        doc["classification"] = {
            "folds": summary.folds,
            "spread": "sample standard deviation",
            "mean": summary.mean,
            "std": summary.std,
            "flagged_classes": sorted(flagged),
        }
    if curve is not None:
        doc["localization"] = {
            "level": level,
            "radius_at_level": radius_at_accuracy(curve, level),
            "max_radius": float(curve.radii[-1]) if curve.radii.size else None,
        }
    return doc
