"""
Main CLI application for echoloc.

Usage:
    echoloc scene build|validate
    echoloc rir [SCENE] --source X,Y,Z [--free-field] [--oracle image-source]
    echoloc dataset [SCENE] --mode regions|coords [--grid 8x8]
    echoloc train DATASET [--fold K | --all-folds]
    echoloc eval DATASET --model FILE | --predictions CSV
    echoloc report --train-dir DIR --eval-dir DIR -o OUT
    echoloc config show
    echoloc version

Errors are printed to standard error as ``error: <code>: <message>``.
Exit codes: 0 success, 1 internal error, 2 user or input error.
"""

from __future__ import annotations

import asyncio
import functools
import logging
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Optional, TypeVar

import typer
from rich.console import Console
from rich.logging import RichHandler

from echoloc.config import EcholocConfig, find_config_path, load_config
from echoloc.errors import EcholocError, ErrorCode, MetricsError

app = typer.Typer(name="echoloc", help="Echoloc - room acoustics simulation and sound source localization")
scene_app = typer.Typer(help="Scene files")
config_app = typer.Typer(help="Configuration management")

app.add_typer(scene_app, name="scene")
app.add_typer(config_app, name="config")

console = Console()
err_console = Console(stderr=True)

F = TypeVar("F", bound=Callable[..., Any])


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _handle_errors(fn: F) -> F:
    """Map pipeline errors to ``error:`` lines and exit codes."""

    @functools.wraps(fn)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return fn(*args, **kwargs)
        except (typer.Exit, typer.Abort, typer.BadParameter):
            raise
        except EcholocError as e:
            err_console.print(f"error: {e.code or 'error'}: {e}", markup=False, highlight=False, soft_wrap=True)
            raise typer.Exit(e.exit_code) from e
        except Exception as e:
            logging.getLogger(__name__).debug("Internal error", exc_info=True)
            err_console.print(f"error: internal: {e}", markup=False, highlight=False, soft_wrap=True)
            raise typer.Exit(1) from e

    return wrapper  # type: ignore[return-value]


def _load(config_path: Path | None, profile: str | None, overrides: dict[str, Any]) -> EcholocConfig:
    return load_config(config_path or find_config_path(), profile=profile, cli_overrides=overrides)


def _parse_point(text: str) -> tuple[float, float, float]:
    parts = [p.strip() for p in text.split(",")]
    try:
        values = tuple(float(p) for p in parts)
    except ValueError:
        raise typer.BadParameter(f"expected x,y,z in metres, got {text!r}") from None
    if len(values) != 3:
        raise typer.BadParameter(f"expected three comma-separated values, got {text!r}")
    return values  # type: ignore[return-value]


def _parse_grid(text: str) -> tuple[int, int]:
    try:
        rows, cols = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise typer.BadParameter(f"expected ROWSxCOLS, got {text!r}") from None
    if rows < 1 or cols < 1:
        raise typer.BadParameter("grid dimensions must be >= 1")
    return rows, cols


def _load_scene_or_preset(scene_path: Path | None):
    from echoloc.scene.format import load_scene
    from echoloc.scene.house import house10

    return load_scene(scene_path) if scene_path is not None else house10()


def _config_option() -> Any:
    return typer.Option(None, "--config", help="YAML config file (default: ./echoloc.yaml if present)")


def _profile_option() -> Any:
    return typer.Option(None, "--profile", help="Config profile name")


@app.callback()
def main_callback(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log progress to standard error"),
) -> None:
    root = logging.getLogger()
    if not any(isinstance(h, RichHandler) for h in root.handlers):
        root.addHandler(RichHandler(console=err_console, show_time=False, show_path=False))
    root.setLevel(logging.INFO if verbose else logging.WARNING)


# ---------------------------------------------------------------------------
# scene
# ---------------------------------------------------------------------------

@scene_app.command("build")
@_handle_errors
def scene_build(
    preset: str = typer.Option("house10", "--preset", help="Preset scene: house10 or shoebox"),
    output: Path = typer.Option(Path("scene.json"), "--output", "-o", help="Scene file to write"),
):
    """Write a preset scene file."""
    from echoloc.scene.format import save_scene
    from echoloc.scene.house import PRESETS

    if preset not in PRESETS:
        raise EcholocError(f"unknown preset {preset!r} (choose from {', '.join(sorted(PRESETS))})",
                           ErrorCode.VALIDATION_ERROR)
    scene = PRESETS[preset]()
    checksum = save_scene(scene, output)
    console.print(f"Wrote {output} ({len(scene.regions)} regions, {scene.num_triangles} triangles)", soft_wrap=True)
    console.print(f"  sha256 {checksum}", soft_wrap=True)


@scene_app.command("validate")
@_handle_errors
def scene_validate(path: Path = typer.Argument(..., help="Scene file")):
    """Parse a scene file and check its invariants."""
    from echoloc.cli.output import OutputFormatter
    from echoloc.scene.format import load_scene, scene_checksum

    scene = load_scene(path)
    OutputFormatter(console).format_scene(scene, scene_checksum(scene))
    console.print("[green]Scene is valid.[/green]")


# ---------------------------------------------------------------------------
# rir
# ---------------------------------------------------------------------------

@app.command()
@_handle_errors
def rir(
    scene_path: Optional[Path] = typer.Argument(None, help="Scene file (default: house10 preset)"),
    source: Optional[str] = typer.Option(None, "--source", help="Source position x,y,z in metres"),
    receiver: Optional[str] = typer.Option(None, "--receiver", help="Receiver position x,y,z in metres [default: the scene's receiver]"),
    output: Path = typer.Option(Path("rir.wav"), "--output", "-o", help="WAV file; a .yaml sidecar is written next to it"),
    free_field: bool = typer.Option(False, "--free-field", help="No geometry: receiver at the origin, source at --distance along +x"),
    distance: float = typer.Option(3.43, "--distance", help="Source distance for --free-field, metres"),
    oracle: Optional[str] = typer.Option(None, "--oracle", help="Analytic reference instead of path tracing: image-source"),
    order: int = typer.Option(2, "--order", help="Maximum reflection order for --oracle image-source"),
    rays: Optional[int] = typer.Option(None, "--rays", help="Rays per endpoint [config: 100000]"),
    bounces: Optional[int] = typer.Option(None, "--bounces", help="Maximum bounces per subpath [config: 50]"),
    sample_rate: Optional[int] = typer.Option(None, "--sample-rate", help="Sample rate in Hz [config: 16000]"),
    duration: Optional[float] = typer.Option(None, "--duration", help="RIR length in seconds [config: 1.0]"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Propagation seed [config: 0]"),
    threads: Optional[int] = typer.Option(None, "--threads", help="Worker threads [env ECHOLOC_THREADS, config: 1]"),
    config: Optional[Path] = _config_option(),
    profile: Optional[str] = _profile_option(),
):
    """Simulate one room impulse response."""
    from echoloc.propagation.export import export_rir
    from echoloc.propagation.image_source import image_source_rir
    from echoloc.propagation.tracer import simulate_rir
    from echoloc.scene.format import scene_checksum
    from echoloc.scene.types import open_scene

    cfg = _load(config, profile, {
        "propagation.rays_per_endpoint": rays,
        "propagation.max_bounces": bounces,
        "propagation.sample_rate": sample_rate,
        "propagation.rir_duration": duration,
        "propagation.seed": seed,
        "run.threads": threads,
    })

    if free_field:
        if distance <= 0:
            raise typer.BadParameter("--distance must be > 0")
        half = distance + 1.0
        scene = open_scene(((-half, -half, -half), (half, half, half)), (0.0, 0.0, 0.0))
        src = (distance, 0.0, 0.0)
    else:
        if source is None:
            raise typer.BadParameter("--source is required unless --free-field is given")
        scene = _load_scene_or_preset(scene_path)
        if receiver is not None:
            scene = scene.with_receiver(_parse_point(receiver))
        src = _parse_point(source)

    if oracle is None:
        ir = simulate_rir(scene, src, cfg.propagation, threads=cfg.run.threads)
    elif oracle == "image-source":
        if not scene.materials:
            raise EcholocError("the image-source oracle needs a scene with a wall material", ErrorCode.VALIDATION_ERROR)
        lo = scene.bounds[0].as_array()
        ir = image_source_rir(
            scene.extent,
            [s - o for s, o in zip(src, lo)],
            [r - o for r, o in zip(scene.receiver, lo)],
            scene.materials[0].absorption,
            order,
            cfg.propagation,
        )
    else:
        raise typer.BadParameter(f"unknown oracle {oracle!r} (supported: image-source)")

    export_rir(output, ir, cfg.propagation, scene_checksum=scene_checksum(scene), receiver=list(scene.receiver))
    peak = int(abs(ir.samples).argmax()) if len(ir) else 0
    console.print(f"Wrote {output} ({len(ir)} samples at {ir.sample_rate} Hz, peak at sample {peak})", soft_wrap=True)


# ---------------------------------------------------------------------------
# dataset
# ---------------------------------------------------------------------------

@app.command()
@_handle_errors
def dataset(
    scene_path: Optional[Path] = typer.Argument(None, help="Scene file (default: house10 preset)"),
    mode: str = typer.Option("regions", "--mode", help="regions (labelled room grid) or coords (floor lattice)"),
    grid: Optional[str] = typer.Option(None, "--grid", help="Per-region grid ROWSxCOLS for --mode regions [config: 8x8]"),
    spacing: Optional[float] = typer.Option(None, "--spacing", help="Lattice spacing for --mode coords [config: 0.52]"),
    test_count: Optional[int] = typer.Option(None, "--test-count", help="Held-out test placements written to <output>/test, 0 for none [config: 250 regions, 100 coords]"),
    folds: Optional[int] = typer.Option(None, "--folds", help="Stratified folds for --mode regions [config: 5]"),
    receiver: Optional[str] = typer.Option(None, "--receiver", help="Receiver position x,y,z in metres [default: the scene's receiver]"),
    dry: Optional[Path] = typer.Option(None, "--dry", help="Dry WAV at the simulation rate (default: built-in test signal)"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Dataset directory [default: <output_dir>/dataset-<mode>]"),
    rays: Optional[int] = typer.Option(None, "--rays", help="Rays per endpoint [config: 100000]"),
    bounces: Optional[int] = typer.Option(None, "--bounces", help="Maximum bounces per subpath [config: 50]"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Root seed for propagation, test grid and folds [config: 0]"),
    threads: Optional[int] = typer.Option(None, "--threads", help="Placements rendered concurrently [env ECHOLOC_THREADS, config: 1]"),
    config: Optional[Path] = _config_option(),
    profile: Optional[str] = _profile_option(),
):
    """Render spectrograms for a grid of source placements.

    The grid goes to the output directory; the held-out test placements are
    rendered as a second dataset in its ``test`` subdirectory.
    """
    from echoloc.audio.dry import load_dry
    from echoloc.cli.output import OutputFormatter
    from echoloc.dataset.manifest import TEST_DIR
    from echoloc.dataset.placement import coordinate_grid, offset_test_grid, region_grid
    from echoloc.dataset.render import render_dataset

    if mode not in ("regions", "coords"):
        raise typer.BadParameter(f"--mode must be regions or coords, got {mode!r}")
    rows, cols = _parse_grid(grid) if grid is not None else (None, None)
    cfg = _load(config, profile, {
        "dataset.grid_rows": rows,
        "dataset.grid_cols": cols,
        "propagation.rays_per_endpoint": rays,
        "propagation.max_bounces": bounces,
        "dataset.spacing": spacing,
        "dataset.folds": folds,
        "run.seed": seed,
        "run.threads": threads,
    })
    ds = cfg.dataset
    scene = _load_scene_or_preset(scene_path)
    if receiver is not None:
        scene = scene.with_receiver(_parse_point(receiver))

    if mode == "regions":
        train_set = region_grid(scene, ds.grid_rows, ds.grid_cols, ds.height, ds.shrink)
        count = ds.test_count if test_count is None else test_count
    else:
        train_set = coordinate_grid(scene, ds.spacing, ds.height)
        count = ds.coords_test_count if test_count is None else test_count
    test_set = offset_test_grid(scene, train_set, count, cfg.run.seed) if count > 0 else []

    out = output or Path(cfg.run.output_dir) / f"dataset-{mode}"
    dry_clip = load_dry(dry, cfg.propagation.sample_rate)
    formatter = OutputFormatter(console)
    manifest = asyncio.run(render_dataset(
        scene, train_set, dry_clip, cfg, out,
        mode=mode,
        threads=cfg.run.threads,
        folds=ds.folds if mode == "regions" else None,
    ))
    formatter.format_manifest(manifest)
    console.print(f"Wrote {out / 'manifest.json'} ({len(manifest.entries)} entries)", soft_wrap=True)
    if test_set:
        held_out = asyncio.run(render_dataset(
            scene, test_set, dry_clip, cfg, out / TEST_DIR,
            mode=mode,
            threads=cfg.run.threads,
            stream="rir-test",
        ))
        console.print(f"Wrote {out / TEST_DIR / 'manifest.json'} ({len(held_out.entries)} entries)", soft_wrap=True)


# ---------------------------------------------------------------------------
# train / eval / report
# ---------------------------------------------------------------------------

def _prediction_rows(report, manifest) -> list[dict[str, Any]]:
    by_index = {e.index: e for e in manifest.entries}
    rows = []
    for idx, pred in zip(report.val_indices, report.val_predictions):
        entry = by_index[idx]
        if isinstance(pred, tuple):
            rows.append({
                "index": idx,
                "true_x": entry.placement.position.x,
                "true_z": entry.placement.position.z,
                "pred_x": pred[0],
                "pred_z": pred[1],
            })
        else:
            rows.append({"index": idx, "truth": entry.label, "prediction": manifest.classes[pred]})
    return rows


@app.command()
@_handle_errors
def train(
    dataset_dir: Path = typer.Argument(..., help="Dataset directory or manifest file"),
    task: Optional[str] = typer.Option(None, "--task", help="regions or coords [default: the dataset mode]"),
    fold: Optional[int] = typer.Option(None, "--fold", help="Validate on this fold, train on the others"),
    all_folds: bool = typer.Option(False, "--all-folds", help="Cross-validate over every fold"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Output directory [default: <output_dir>/train-<task>]"),
    epochs: Optional[int] = typer.Option(None, "--epochs", help="Training epochs [config: 100]"),
    learning_rate: Optional[float] = typer.Option(None, "--learning-rate", help="SGD learning rate [config: 0.01]"),
    batch_size: Optional[int] = typer.Option(None, "--batch-size", help="Mini-batch size [config: 32]"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Initialization and shuffle seed [config: 0]"),
    config: Optional[Path] = _config_option(),
    profile: Optional[str] = _profile_option(),
):
    """Train the localizer on one fold, every fold, or the full train split.

    Without --fold or --all-folds the model is trained on every train
    placement and validated on the held-out set in <dataset>/test (or on the
    test split of the manifest itself).
    """
    import pandas as pd

    from echoloc.cli.output import OutputFormatter
    from echoloc.dataset.manifest import held_out_manifest, load_manifest
    from echoloc.eval.metrics import ClassMetrics, cv_summary
    from echoloc.eval.report import write_csv
    from echoloc.localize.serialize import save_model
    from echoloc.localize.train import cross_validate, train as train_fold

    if fold is not None and all_folds:
        raise typer.BadParameter("--fold and --all-folds are mutually exclusive")
    cfg = _load(config, profile, {
        "model.epochs": epochs,
        "model.learning_rate": learning_rate,
        "model.batch_size": batch_size,
        "model.seed": seed,
    })
    manifest = load_manifest(dataset_dir)
    task = task or manifest.mode
    if task not in ("regions", "coords"):
        raise typer.BadParameter(f"--task must be regions or coords, got {task!r}")
    model_cfg = replace(cfg.model, task=task)
    out = output or Path(cfg.run.output_dir) / f"train-{task}"

    held_out = held_out_manifest(manifest) if fold is None and not all_folds else None
    if all_folds:
        results = cross_validate(model_cfg, manifest)
    else:
        results = [train_fold(model_cfg, manifest, fold, held_out=held_out)]

    formatter = OutputFormatter(console)
    fold_rows: list[dict[str, Any]] = []
    predictions: list[dict[str, Any]] = []
    losses: dict[str, list[float]] = {}
    accuracy: dict[str, list[float]] = {}
    for model, result in results:
        tag = f"fold{result.fold}" if result.fold is not None else "full"
        save_model(model, out / "models" / f"{tag}.elmdl")
        losses[tag] = result.epoch_loss
        if result.epoch_accuracy:
            accuracy[tag] = result.epoch_accuracy
            final = result.epoch_accuracy[-1]
            console.print(f"{tag}: training accuracy {final:.4f} after {len(result.epoch_accuracy)} epochs")
        rows = _prediction_rows(result, held_out if held_out is not None else manifest)
        predictions += [{"model": tag, **r} for r in rows]
        m = result.val_metrics
        if m is None:
            continue
        row: dict[str, Any] = {"model": tag, **m.summary()}
        if isinstance(m, ClassMetrics):
            row["flagged"] = ";".join(manifest.classes[i] for i in m.flagged)
            formatter.format_class_metrics(m, manifest.classes, title=f"Validation ({tag})")
        fold_rows.append(row)

    if predictions:
        write_csv(pd.DataFrame(predictions), out / "predictions.csv")
    if any(losses.values()):
        write_csv(pd.DataFrame({k: pd.Series(v) for k, v in losses.items()}).rename_axis("epoch"),
                  out / "losses.csv", index=True)
    if accuracy:
        write_csv(pd.DataFrame({k: pd.Series(v) for k, v in accuracy.items()}).rename_axis("epoch"),
                  out / "accuracy.csv", index=True)
    if fold_rows:
        frame = pd.DataFrame(fold_rows)
        write_csv(frame, out / "folds.csv")
        if len(fold_rows) >= 2:
            numeric = [{k: v for k, v in r.items() if isinstance(v, float)} for r in fold_rows]
            summary = cv_summary(numeric)
            write_csv(pd.DataFrame(summary.rows()), out / "cv_summary.csv")
            if task == "regions":
                formatter.format_cv_summary(summary)
    console.print(f"Wrote {len(results)} model(s) to {out / 'models'}", soft_wrap=True)


def _read_predictions(path: Path, task: str) -> "Any":
    import pandas as pd

    if not path.is_file():
        raise MetricsError(f"predictions file not found: {path}", ErrorCode.MISSING_FILE)
    frame = pd.read_csv(path)
    needed = {"index", "prediction"} if task == "regions" else {"index", "pred_x", "pred_z"}
    if not needed <= set(frame.columns):
        raise MetricsError(f"{path}: missing columns {sorted(needed - set(frame.columns))}", ErrorCode.PARSE_ERROR)
    return frame


@app.command("eval")
@_handle_errors
def eval_cmd(
    dataset_dir: Path = typer.Argument(..., help="Dataset directory or manifest file"),
    model_path: Optional[Path] = typer.Option(None, "--model", help="Model file (.elmdl) to run"),
    predictions: Optional[Path] = typer.Option(None, "--predictions", help="Predictions CSV to score instead of running a model"),
    task: Optional[str] = typer.Option(None, "--task", help="regions or coords [default: the dataset mode]"),
    split: str = typer.Option("test", "--split", help="Entries to score: train, test or all"),
    radius_step: float = typer.Option(0.1, "--radius-step", help="Leniency curve radius step, metres"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Output directory [default: <output_dir>/eval-<task>]"),
    config: Optional[Path] = _config_option(),
    profile: Optional[str] = _profile_option(),
):
    """Score a model (or a predictions file) and write metric tables.

    With --split test and no test split in the manifest, the held-out set in
    <dataset>/test is scored.
    """
    from echoloc.cli.output import OutputFormatter
    from echoloc.dataset.manifest import held_out_manifest, load_manifest
    from echoloc.eval.metrics import confusion, metrics
    from echoloc.eval.regression import default_radii, leniency_curve, regression_error
    from echoloc.eval.report import write_classification_tables, write_regression_tables
    from echoloc.localize.features import coordinates_of, load_features
    from echoloc.localize.serialize import load_model
    from echoloc.localize.train import predict_batch

    if (model_path is None) == (predictions is None):
        raise typer.BadParameter("give exactly one of --model or --predictions")
    if split not in ("train", "test", "all"):
        raise typer.BadParameter(f"--split must be train, test or all, got {split!r}")
    cfg = _load(config, profile, {})
    manifest = load_manifest(dataset_dir)
    if split == "test" and not manifest.test_entries:
        manifest = held_out_manifest(manifest) or manifest
    task = task or manifest.mode
    if task not in ("regions", "coords"):
        raise typer.BadParameter(f"--task must be regions or coords, got {task!r}")
    out = output or Path(cfg.run.output_dir) / f"eval-{task}"

    pool = {"train": manifest.train_entries, "test": manifest.test_entries, "all": manifest.entries}[split]
    entries = sorted(pool, key=lambda e: e.index)

    if model_path is not None:
        model = load_model(model_path)
        if model.task != task:
            raise EcholocError(f"model task is {model.task!r}, not {task!r}", ErrorCode.VALIDATION_ERROR)
        if not entries:
            raise MetricsError(f"no {split} entries to score")
        preds = predict_batch(model, load_features(manifest, entries, model.config.input_shape))
    else:
        frame = _read_predictions(predictions, task)
        wanted = {e.index for e in entries}
        frame = frame[frame["index"].isin(wanted)].sort_values("index")
        by_index = {e.index: e for e in entries}
        entries = [by_index[int(i)] for i in frame["index"]]
        if not entries:
            raise MetricsError(f"no predictions for {split} entries")
        if task == "regions":
            preds = [manifest.class_index(str(p)) for p in frame["prediction"]]
        else:
            preds = list(zip(frame["pred_x"].astype(float), frame["pred_z"].astype(float)))

    formatter = OutputFormatter(console)
    if task == "regions":
        truths = [manifest.class_index(e.label) for e in entries]
        cm = confusion(preds, truths, len(manifest.classes))
        m = metrics(cm)
        written = write_classification_tables(out, cm, m, manifest.classes)
        formatter.format_class_metrics(m, manifest.classes)
    else:
        err = regression_error(preds, coordinates_of(entries))
        curve = leniency_curve(err.distances, default_radii(err.distances, radius_step))
        written = write_regression_tables(out, err, curve)
        formatter.format_regression(err, curve)
    for p in written:
        console.print(f"Wrote {p}", soft_wrap=True)


@app.command()
@_handle_errors
def report(
    train_dir: Optional[Path] = typer.Option(None, "--train-dir", help="Output of 'train --all-folds' (reads folds.csv)"),
    eval_dir: Optional[Path] = typer.Option(None, "--eval-dir", help="Output of 'eval --task coords' (reads leniency.csv)"),
    output: Path = typer.Option(Path("report"), "--output", "-o", help="Report directory"),
    level: float = typer.Option(0.5, "--level", help="Accuracy level read off the leniency curve"),
):
    """Summarize cross-validation and localization results next to the reference numbers."""
    import numpy as np
    import pandas as pd

    from echoloc.cli.output import OutputFormatter
    from echoloc.eval.metrics import HEADLINE, cv_summary
    from echoloc.eval.regression import LeniencyCurve
    from echoloc.eval.report import REFERENCE_ROWS, plot_leniency, report_document, write_cv_table, write_summary

    if train_dir is None and eval_dir is None:
        raise typer.BadParameter("give --train-dir, --eval-dir or both")
    formatter = OutputFormatter(console)
    summary = None
    flagged: set[str] = set()
    curve = None

    if train_dir is not None:
        folds_csv = train_dir / "folds.csv"
        if not folds_csv.is_file():
            raise MetricsError(f"fold metrics not found: {folds_csv}", ErrorCode.MISSING_FILE)
        frame = pd.read_csv(folds_csv, keep_default_na=False)
        columns = [c for c in HEADLINE if c in frame.columns]
        if not columns:
            raise MetricsError(f"{folds_csv}: no classification metric columns", ErrorCode.PARSE_ERROR)
        rows = [{c: float(r[c]) for c in columns} for _, r in frame.iterrows()]
        summary = cv_summary(rows)
        for cell in frame.get("flagged", []):
            flagged.update(name for name in str(cell).split(";") if name)
        write_cv_table(output, summary, rows)
        formatter.format_cv_summary(summary, REFERENCE_ROWS)

    if eval_dir is not None:
        curve_csv = eval_dir / "leniency.csv"
        if not curve_csv.is_file():
            raise MetricsError(f"leniency curve not found: {curve_csv}", ErrorCode.MISSING_FILE)
        frame = pd.read_csv(curve_csv)
        curve = LeniencyCurve(radii=frame["radius"].to_numpy(np.float64), accuracy=frame["accuracy"].to_numpy(np.float64))
        svg = plot_leniency(curve, output / "leniency.svg", level=level)
        console.print(f"Wrote {svg}", soft_wrap=True)

    path = write_summary(output, report_document(summary, curve, sorted(flagged), level))
    console.print(f"Wrote {path}", soft_wrap=True)


# ---------------------------------------------------------------------------
# config / version
# ---------------------------------------------------------------------------

@config_app.command("show")
@_handle_errors
def config_show(
    config: Optional[Path] = _config_option(),
    profile: Optional[str] = _profile_option(),
):
    """Show effective config."""
    from echoloc.cli.output import OutputFormatter

    OutputFormatter(console).format_config(_load(config, profile, {}).to_dict())


@app.command()
def version():
    """Show version."""
    from echoloc import __version__

    console.print(f"echoloc v{__version__}")


def main():
    app()


if __name__ == "__main__":
    main()
