"""Output formatting utilities for the CLI."""

from __future__ import annotations

from typing import Any, Sequence

import yaml
from rich.console import Console
from rich.panel import Panel
from rich.syntax import Syntax
from rich.table import Table
from rich.text import Text

from echoloc.dataset.manifest import DatasetManifest
from echoloc.eval.metrics import ClassMetrics, CVSummary
from echoloc.eval.regression import LeniencyCurve, RegressionError, radius_at_accuracy
from echoloc.scene.types import Scene


def _score_style(value: float) -> str:
    if value >= 0.75:
        return "green"
    if value >= 0.5:
        return "yellow"
    return "red"


class OutputFormatter:
    """Rich-based output formatting for the echoloc CLI."""

    def __init__(self, console: Console | None = None) -> None:
        self.console = console or Console()

    def format_config(self, config: dict) -> None:
        text = yaml.safe_dump(config, sort_keys=True)
        self.console.print(Syntax(text, "yaml", theme="monokai"))

    def format_scene(self, scene: Scene, checksum: str | None = None) -> None:
        lo, hi = scene.bounds
        lines = [
            f"[dim]Triangles:[/dim] {scene.num_triangles}",
            f"[dim]Materials:[/dim] {', '.join(m.name or '?' for m in scene.materials) or 'none'}",
            f"[dim]Bounds:[/dim] {tuple(lo)} .. {tuple(hi)}",
            f"[dim]Receiver:[/dim] {tuple(scene.receiver)}",
        ]
        if checksum:
            lines.append(f"[dim]Checksum:[/dim] {checksum}")
        self.console.print(Panel("\n".join(lines), title=f"Scene ({len(scene.regions)} regions)"))
        if scene.regions:
            table = Table(title="Regions")
            table.add_column("Name", style="cyan", no_wrap=True)
            table.add_column("Min")
            table.add_column("Max")
            for r in scene.regions:
                table.add_row(r.name, str(tuple(r.min)), str(tuple(r.max)))
            self.console.print(table)

    def format_manifest(self, manifest: DatasetManifest) -> None:
        table = Table(title=f"Dataset ({manifest.mode})")
        table.add_column("Split", style="cyan")
        table.add_column("Entries", justify="right")
        table.add_row("train", str(len(manifest.train_entries)))
        table.add_row("test", str(len(manifest.test_entries)))
        if manifest.folds:
            table.add_row("folds", " / ".join(str(n) for n in manifest.fold_sizes()))
        self.console.print(table)

    def format_class_metrics(self, m: ClassMetrics, classes: Sequence[str], title: str = "Classification") -> None:
        table = Table(title=title)
        table.add_column("Class", style="cyan", no_wrap=True)
        table.add_column("Precision", justify="right")
        table.add_column("Recall", justify="right")
        table.add_column("F1", justify="right")
        table.add_column("Support", justify="right")
        for i, name in enumerate(classes):
            flag = " *" if i in m.flagged else ""
            table.add_row(
                name + flag,
                f"{m.precision[i]:.3f}",
                f"{m.recall[i]:.3f}",
                Text(f"{m.f1[i]:.3f}", style=_score_style(float(m.f1[i]))),
                str(int(m.support[i])),
            )
        table.add_row("[bold]macro[/bold]", f"{m.macro_precision:.3f}", f"{m.macro_recall:.3f}",
                      Text(f"{m.macro_f1:.3f}", style=_score_style(m.macro_f1)), "")
        self.console.print(table)
        self.console.print(f"  Accuracy: {m.accuracy:.3f}")
        if m.flagged:
            self.console.print("  [dim]* zero-denominator precision or recall, scored 0[/dim]")

    def format_regression(self, err: RegressionError, curve: LeniencyCurve, level: float = 0.5) -> None:
        s = err.summary()
        radius = radius_at_accuracy(curve, level)
        at = f"{radius:.2f} m" if radius is not None else "not reached"
        self.console.print(Panel(
            f"[dim]MSE:[/dim] {s['mse']:.4f}\n"
            f"[dim]Mean distance:[/dim] {s['mean_distance']:.3f} m\n"
            f"[dim]Median distance:[/dim] {s['median_distance']:.3f} m\n"
            f"[dim]{level:.0%} accuracy radius:[/dim] {at}",
            title=f"Localization ({err.distances.size} samples)",
        ))

    def format_cv_summary(self, summary: CVSummary, reference: Sequence[dict[str, Any]] = ()) -> None:
        table = Table(title=f"{summary.folds}-fold cross-validation (mean ± sample std)")
        table.add_column("Model", style="cyan", no_wrap=True)
        for key in ("precision", "recall", "f1"):
            table.add_column(key.capitalize(), justify="right")
        table.add_row(
            "this run",
            *(f"{summary.mean.get(k, float('nan')):.3f} ± {summary.std.get(k, float('nan')):.3f}"
              for k in ("precision", "recall", "f1")),
        )
        for row in reference:
            table.add_row(
                Text(row["model"], style="dim"),
                *(f"{row[k]:.3f} ± {row[k + '_std']:.3f}" for k in ("precision", "recall", "f1")),
            )
        self.console.print(table)
