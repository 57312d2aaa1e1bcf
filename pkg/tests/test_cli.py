"""
CLI tests using typer's CliRunner.

Path tracing is replaced by a delta response in the dataset pipeline tests
so that a full dataset -> train -> eval -> report run stays fast.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
import yaml
from typer.testing import CliRunner

from echoloc import __version__
from echoloc.cli.app import app
from echoloc.dataset import render as render_module
from echoloc.dataset.manifest import DatasetManifest, ManifestEntry, load_manifest
from echoloc.dataset.placement import SourcePlacement
from echoloc.propagation.types import ImpulseResponse
from echoloc.scene.types import Point3

runner = CliRunner()


@pytest.fixture(autouse=True)
def _isolated(tmp_path: Path, monkeypatch):
    for var in [v for v in os.environ if v.startswith("ECHOLOC_")]:
        monkeypatch.delenv(var)
    monkeypatch.chdir(tmp_path)


@pytest.fixture
def fast_rir(monkeypatch):
    def fake(scene, source, config, *, threads=1):
        samples = np.zeros(config.num_samples)
        samples[10 + int(20 * source.x)] = 0.2
        samples[200 + int(20 * source.z)] = 0.05
        return ImpulseResponse(samples, config.sample_rate)

    monkeypatch.setattr(render_module, "simulate_rir", fake)


def _small_config(tmp_path: Path) -> Path:
    path = tmp_path / "small.yaml"
    path.write_text(yaml.safe_dump({
        "propagation": {"rir_duration": 0.3},
        "model": {
            "input_shape": [8, 8],
            "conv_blocks": [{"channels": 2, "kernel_size": 3, "pool_size": 2}],
            "dense_sizes": [4],
            "epochs": 2,
            "batch_size": 4,
        },
    }), encoding="utf-8")
    return path


# ===================================================================
# Basics
# ===================================================================


class TestBasics:
    def test_version(self):
        result = runner.invoke(app, ["version"])
        assert result.exit_code == 0
        assert __version__ in result.output

    def test_config_show(self):
        result = runner.invoke(app, ["config", "show"])
        assert result.exit_code == 0
        assert "rays_per_endpoint" in result.output

    def test_config_show_unknown_profile(self, tmp_path: Path):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("run:\n  seed: 1\n", encoding="utf-8")
        result = runner.invoke(app, ["config", "show", "--config", str(cfg), "--profile", "nope"])
        assert result.exit_code == 2
        assert "error: config_error" in result.output


class TestSceneCommands:
    def test_build_and_validate(self, tmp_path: Path):
        out = tmp_path / "box.json"
        result = runner.invoke(app, ["scene", "build", "--preset", "shoebox", "-o", str(out)])
        assert result.exit_code == 0, result.output
        assert "12 triangles" in result.output
        result = runner.invoke(app, ["scene", "validate", str(out)])
        assert result.exit_code == 0, result.output
        assert "Scene is valid" in result.output

    def test_unknown_preset(self):
        result = runner.invoke(app, ["scene", "build", "--preset", "castle"])
        assert result.exit_code == 2
        assert "error: validation_error" in result.output

    def test_validate_broken_file(self, tmp_path: Path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json", encoding="utf-8")
        result = runner.invoke(app, ["scene", "validate", str(bad)])
        assert result.exit_code == 2
        assert "error: parse_error" in result.output


# ===================================================================
# rir
# ===================================================================


class TestRir:
    def test_free_field(self, tmp_path: Path):
        out = tmp_path / "ff.wav"
        result = runner.invoke(app, [
            "rir", "--free-field", "--rays", "50", "--bounces", "2", "--duration", "0.05", "-o", str(out),
        ])
        assert result.exit_code == 0, result.output
        assert "peak at sample 160" in result.output
        assert out.is_file()
        assert out.with_suffix(".yaml").is_file()

    def test_image_source_oracle(self, tmp_path: Path):
        scene = tmp_path / "box.json"
        runner.invoke(app, ["scene", "build", "--preset", "shoebox", "-o", str(scene)])
        out = tmp_path / "is.wav"
        result = runner.invoke(app, [
            "rir", str(scene), "--source", "1,2,2", "--oracle", "image-source", "--order", "1",
            "--duration", "0.1", "-o", str(out),
        ])
        assert result.exit_code == 0, result.output
        side = yaml.safe_load(out.with_suffix(".yaml").read_text(encoding="utf-8"))
        assert side["propagation"]["rir_duration"] == 0.1

    def test_receiver_override(self, tmp_path: Path):
        scene = tmp_path / "box.json"
        runner.invoke(app, ["scene", "build", "--preset", "shoebox", "-o", str(scene)])
        out = tmp_path / "moved.wav"
        result = runner.invoke(app, [
            "rir", str(scene), "--source", "1,2,2", "--receiver", "4,2,2", "--oracle", "image-source",
            "--order", "0", "--duration", "0.1", "-o", str(out),
        ])
        assert result.exit_code == 0, result.output
        side = yaml.safe_load(out.with_suffix(".yaml").read_text(encoding="utf-8"))
        assert side["receiver"] == [4.0, 2.0, 2.0]
        # direct path only: 3 m at 343 m/s and 16 kHz
        assert "peak at sample 140" in result.output

    def test_receiver_outside_scene(self, tmp_path: Path):
        scene = tmp_path / "box.json"
        runner.invoke(app, ["scene", "build", "--preset", "shoebox", "-o", str(scene)])
        result = runner.invoke(app, ["rir", str(scene), "--source", "1,2,2", "--receiver", "9,1,1"])
        assert result.exit_code == 2
        assert "error: validation_error" in result.output

    def test_source_required(self):
        result = runner.invoke(app, ["rir"])
        assert result.exit_code == 2
        assert "--source" in result.output

    def test_bad_point(self):
        result = runner.invoke(app, ["rir", "--source", "1,2"])
        assert result.exit_code == 2

    def test_source_outside_scene(self, tmp_path: Path):
        result = runner.invoke(app, ["rir", "--source", "100,1,1", "--rays", "10", "--duration", "0.05"])
        assert result.exit_code == 2
        assert "error: source_outside" in result.output


# ===================================================================
# Pipeline
# ===================================================================


class TestPipeline:
    def test_dataset_train_eval_report(self, tmp_path: Path, fast_rir):
        cfg = _small_config(tmp_path)
        scene = tmp_path / "box.json"
        assert runner.invoke(app, ["scene", "build", "--preset", "shoebox", "-o", str(scene)]).exit_code == 0

        ds = tmp_path / "ds"
        result = runner.invoke(app, [
            "dataset", str(scene), "--mode", "coords", "--spacing", "1.0", "--test-count", "2",
            "-o", str(ds), "--config", str(cfg),
        ])
        assert result.exit_code == 0, result.output
        assert (ds / "manifest.json").is_file()
        assert load_manifest(ds).test_entries == []
        assert len(load_manifest(ds / "test").entries) == 2

        tr = tmp_path / "train"
        result = runner.invoke(app, ["train", str(ds), "-o", str(tr), "--config", str(cfg)])
        assert result.exit_code == 0, result.output
        model = tr / "models" / "full.elmdl"
        assert model.is_file()
        assert len(pd.read_csv(tr / "losses.csv")) == 2

        ev = tmp_path / "eval"
        result = runner.invoke(app, ["eval", str(ds), "--model", str(model), "-o", str(ev), "--config", str(cfg)])
        assert result.exit_code == 0, result.output
        assert len(pd.read_csv(ev / "distances.csv")) == 2
        assert (ev / "leniency.csv").is_file()

        rep = tmp_path / "report"
        result = runner.invoke(app, ["report", "--eval-dir", str(ev), "-o", str(rep)])
        assert result.exit_code == 0, result.output
        assert (rep / "leniency.svg").is_file()
        assert "localization" in yaml.safe_load((rep / "report.yaml").read_text(encoding="utf-8"))

    def test_regions_grid_holds_only_grid_placements(self, tmp_path: Path, fast_rir):
        cfg = _small_config(tmp_path)
        ds = tmp_path / "ds"
        result = runner.invoke(app, [
            "dataset", "--mode", "regions", "--grid", "8x8", "--test-count", "3", "-o", str(ds), "--config", str(cfg),
        ])
        assert result.exit_code == 0, result.output
        assert "(640 entries)" in result.output
        grid = load_manifest(ds)
        assert len(grid.entries) == 640
        assert grid.fold_sizes() == [128] * 5
        held_out = load_manifest(ds / "test")
        assert len(held_out.entries) == 3
        assert all(e.placement.split == "test" for e in held_out.entries)
        assert held_out.config["stream"] != grid.config["stream"]

    def test_grid_defaults_to_config(self, tmp_path: Path, fast_rir):
        cfg = tmp_path / "grid.yaml"
        cfg.write_text(yaml.safe_dump({
            "propagation": {"rir_duration": 0.3},
            "dataset": {"grid_rows": 1, "grid_cols": 2, "folds": 2},
        }), encoding="utf-8")
        result = runner.invoke(app, ["dataset", "--test-count", "0", "-o", "ds", "--config", str(cfg)])
        assert result.exit_code == 0, result.output
        manifest = load_manifest(tmp_path / "ds")
        assert len(manifest.entries) == 20
        assert (manifest.config["dataset"]["grid_rows"], manifest.config["dataset"]["grid_cols"]) == (1, 2)
        assert not (tmp_path / "ds" / "test").exists()

    def test_receiver_option(self, tmp_path: Path, fast_rir):
        scene = tmp_path / "box.json"
        runner.invoke(app, ["scene", "build", "--preset", "shoebox", "-o", str(scene)])
        result = runner.invoke(app, [
            "dataset", str(scene), "--grid", "1x2", "--folds", "2", "--test-count", "0",
            "--receiver", "4,1.5,2", "-o", "ds", "--config", str(_small_config(tmp_path)),
        ])
        assert result.exit_code == 0, result.output
        assert load_manifest(tmp_path / "ds").config["receiver"] == [4.0, 1.5, 2.0]

    def test_regions_training_reports_accuracy(self, tmp_path: Path, fast_rir):
        cfg = _small_config(tmp_path)
        ds = tmp_path / "ds"
        result = runner.invoke(app, [
            "dataset", "--grid", "1x2", "--folds", "2", "--test-count", "0", "-o", str(ds), "--config", str(cfg),
        ])
        assert result.exit_code == 0, result.output
        result = runner.invoke(app, ["train", str(ds), "--all-folds", "-o", "tr", "--config", str(cfg)])
        assert result.exit_code == 0, result.output
        assert "fold0: training accuracy" in result.output
        accuracy = pd.read_csv(tmp_path / "tr" / "accuracy.csv")
        assert list(accuracy.columns) == ["epoch", "fold0", "fold1"]
        assert len(accuracy) == 2
        assert accuracy[["fold0", "fold1"]].to_numpy().max() <= 1.0

    def test_eval_predictions_file(self, tmp_path: Path):
        entries = [
            ManifestEntry(i, SourcePlacement(Point3(float(i), 1.0, 1.0), label, "test"), f"spec/{i}.bin", "x")
            for i, label in enumerate(["a", "b", "a", "b"])
        ]
        DatasetManifest("regions", "s", "d", {}, ["a", "b"], entries).save(tmp_path / "ds" / "manifest.json")
        preds = tmp_path / "preds.csv"
        pd.DataFrame({"index": [0, 1, 2, 3], "prediction": ["a", "b", "b", "b"]}).to_csv(preds, index=False)

        result = runner.invoke(app, ["eval", str(tmp_path / "ds"), "--predictions", str(preds), "-o", "ev"])
        assert result.exit_code == 0, result.output
        table = pd.read_csv(tmp_path / "ev" / "class_metrics.csv")
        assert table.loc[table["class"] == "a", "recall"].item() == pytest.approx(0.5)

    def test_eval_needs_exactly_one_source(self, tmp_path: Path):
        result = runner.invoke(app, ["eval", str(tmp_path)])
        assert result.exit_code == 2

    def test_eval_missing_manifest(self, tmp_path: Path):
        preds = tmp_path / "p.csv"
        preds.write_text("index,prediction\n", encoding="utf-8")
        result = runner.invoke(app, ["eval", str(tmp_path / "none"), "--predictions", str(preds)])
        assert result.exit_code == 2
        assert "error: missing_file" in result.output


class TestReport:
    def test_needs_an_input(self):
        result = runner.invoke(app, ["report"])
        assert result.exit_code == 2

    def test_missing_folds_file(self, tmp_path: Path):
        result = runner.invoke(app, ["report", "--train-dir", str(tmp_path)])
        assert result.exit_code == 2
        assert "error: missing_file" in result.output

    def test_cross_validation_summary(self, tmp_path: Path):
        pd.DataFrame([
            {"model": "fold0", "precision": 0.5, "recall": 0.6, "f1": 0.55, "accuracy": 0.6, "flagged": "b"},
            {"model": "fold1", "precision": 0.7, "recall": 0.6, "f1": 0.65, "accuracy": 0.7, "flagged": ""},
        ]).to_csv(tmp_path / "folds.csv", index=False)
        result = runner.invoke(app, ["report", "--train-dir", str(tmp_path), "-o", "rep"])
        assert result.exit_code == 0, result.output
        doc = yaml.safe_load((tmp_path / "rep" / "report.yaml").read_text(encoding="utf-8"))
        assert doc["classification"]["mean"]["f1"] == pytest.approx(0.6)
        assert doc["classification"]["flagged_classes"] == ["b"]
