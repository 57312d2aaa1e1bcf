"""
Tests for path tracing, the image-source reference, decay analysis and RIR
export.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np
import pytest
import soundfile as sf
import yaml

from echoloc.config import PropagationConfig
from echoloc.errors import ErrorCode, PropagationError
from echoloc.propagation.decay import reverberation_time, schroeder_curve
from echoloc.propagation.export import export_rir, sidecar_path
from echoloc.propagation.image_source import image_source_rir, image_sources
from echoloc.propagation.tracer import bin_contributions, connect, simulate_rir, trace_subpaths
from echoloc.propagation.types import ImpulseResponse
from echoloc.scene.house import shoebox
from echoloc.scene.types import Material, open_scene


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------


@pytest.fixture
def small() -> PropagationConfig:
    return PropagationConfig(rays_per_endpoint=300, max_bounces=6, rir_duration=0.1, block_size=64)


@pytest.fixture
def box():
    return shoebox((5.0, 4.0, 3.0), Material(0.3, 0.2, "plaster"), receiver=(3.5, 1.5, 1.0))


SOURCE = (1.0, 2.0, 2.0)


# ===================================================================
# Binning
# ===================================================================


class TestBinning:
    def test_nearest_sample_rounds_half_up(self):
        out = bin_contributions(np.array([2.5 / 10, 2.4 / 10]), np.array([1.0, 2.0]), 10, 5)
        assert out.tolist() == [0.0, 0.0, 2.0, 1.0, 0.0]

    def test_late_contributions_dropped(self):
        out = bin_contributions(np.array([0.0, 9.0]), np.array([1.0, 5.0]), 10, 4)
        assert out.tolist() == [1.0, 0.0, 0.0, 0.0]

    def test_same_sample_accumulates(self):
        out = bin_contributions(np.array([0.1, 0.1]), np.array([1.0, 0.5]), 10, 3)
        assert out[1] == pytest.approx(1.5)


# ===================================================================
# Path tracing
# ===================================================================


class TestTracer:
    def test_free_field_direct_path(self):
        scene = open_scene(((-5, -5, -5), (5, 5, 5)), (0.0, 0.0, 0.0))
        cfg = PropagationConfig(rays_per_endpoint=100, max_bounces=3, rir_duration=0.05)
        ir = simulate_rir(scene, (3.43, 0.0, 0.0), cfg)
        assert len(ir) == 800
        nonzero = np.flatnonzero(ir.samples)
        assert nonzero.tolist() == [160]
        assert ir.samples[160] == pytest.approx(1.0 / (4.0 * np.pi * 3.43))

    def test_source_outside(self, box, small):
        with pytest.raises(PropagationError) as exc:
            simulate_rir(box, (9.0, 1.0, 1.0), small)
        assert exc.value.code == ErrorCode.SOURCE_OUTSIDE

    def test_source_at_receiver(self, box, small):
        with pytest.raises(PropagationError) as exc:
            simulate_rir(box, (3.5, 1.5, 1.0005), small)
        assert exc.value.code == ErrorCode.SOURCE_AT_RECEIVER

    def test_deterministic_for_seed(self, box, small):
        a = simulate_rir(box, SOURCE, small)
        b = simulate_rir(box, SOURCE, small)
        np.testing.assert_array_equal(a.samples, b.samples)

    def test_seed_changes_result(self, box, small):
        from dataclasses import replace

        a = simulate_rir(box, SOURCE, small)
        b = simulate_rir(box, SOURCE, replace(small, seed=1))
        assert not np.array_equal(a.samples, b.samples)

    def test_thread_count_does_not_change_result(self, box, small):
        a = simulate_rir(box, SOURCE, small, threads=1)
        b = simulate_rir(box, SOURCE, small, threads=4)
        np.testing.assert_array_equal(a.samples, b.samples)

    def test_samples_non_negative_and_finite(self, box, small):
        ir = simulate_rir(box, SOURCE, small)
        assert np.all(np.isfinite(ir.samples))
        assert np.all(ir.samples >= 0)
        assert ir.metadata["method"] == "path-tracing"

    def test_subpath_invariants(self, box, small):
        batch = trace_subpaths(box, SOURCE, small)
        assert len(batch) == small.rays_per_endpoint
        for path in batch[:50]:
            assert 1 <= len(path) <= small.max_bounces + 1
            np.testing.assert_array_equal(path.positions[0], SOURCE)
            assert path.energy[0] == 1.0
            assert np.all(np.diff(path.energy) <= 0)
            assert np.all(np.diff(path.length) > 0)

    def test_reflection_energy_matches_absorption(self, box, small):
        path = trace_subpaths(box, SOURCE, small)[0]
        assert path.energy[1] == pytest.approx(0.7)

    def test_connections_sorted_by_subpath(self, box, small):
        src = trace_subpaths(box, SOURCE, small, "source")
        rec = trace_subpaths(box, box.receiver, small, "receiver")
        c = connect(box, src, rec, small)
        assert len(c) > 0
        assert np.all(np.diff(c.subpath) >= 0)
        assert np.all(c.amplitude > 0)
        direct = c.bounces == 0
        assert np.count_nonzero(direct) == small.rays_per_endpoint


# ===================================================================
# Image-source reference
# ===================================================================


class TestImageSource:
    @pytest.mark.parametrize("order,count", [(0, 1), (1, 7), (2, 25)])
    def test_image_counts(self, order: int, count: int):
        positions, orders = image_sources((5.0, 4.0, 3.0), SOURCE, order)
        assert len(positions) == count
        assert orders.max() == order

    def test_first_order_mirror(self):
        positions, orders = image_sources((5.0, 4.0, 3.0), SOURCE, 1)
        mirrored = {tuple(np.round(p, 9)) for p in positions[orders == 1]}
        assert (-1.0, 2.0, 2.0) in mirrored
        assert (9.0, 2.0, 2.0) in mirrored

    def test_direct_path_agrees_with_tracer(self, box, small):
        traced = simulate_rir(box, SOURCE, small)
        reference = image_source_rir((5.0, 4.0, 3.0), SOURCE, tuple(box.receiver), 0.3, 2, small)
        first_traced = np.flatnonzero(traced.samples)[0]
        first_reference = np.flatnonzero(reference.samples)[0]
        assert first_traced == first_reference
        assert traced.samples[first_traced] == pytest.approx(reference.samples[first_reference], rel=1e-9)

    def test_amplitude_law(self, small):
        ir = image_source_rir((5.0, 4.0, 3.0), SOURCE, (3.5, 1.5, 1.0), 0.5, 0, small)
        r = np.linalg.norm(np.subtract(SOURCE, (3.5, 1.5, 1.0)))
        assert ir.samples.sum() == pytest.approx(1.0 / (4.0 * np.pi * r))

    def test_order_limit(self, small):
        with pytest.raises(PropagationError):
            image_source_rir((5.0, 4.0, 3.0), SOURCE, (3.5, 1.5, 1.0), 0.3, 5, small)

    def test_points_outside_box(self, small):
        with pytest.raises(PropagationError) as exc:
            image_source_rir((5.0, 4.0, 3.0), (6.0, 1.0, 1.0), (3.5, 1.5, 1.0), 0.3, 1, small)
        assert exc.value.code == ErrorCode.SOURCE_OUTSIDE


# ===================================================================
# Decay
# ===================================================================


def _exponential_ir(rt60: float, sample_rate: int = 16_000, duration: float = 2.0) -> ImpulseResponse:
    t = np.arange(int(duration * sample_rate)) / sample_rate
    return ImpulseResponse(samples=10.0 ** (-3.0 * t / rt60), sample_rate=sample_rate)


class TestDecay:
    def test_schroeder_starts_at_zero_and_decreases(self):
        curve = schroeder_curve(_exponential_ir(0.5))
        assert curve[0] == 0.0
        assert np.all(np.diff(curve) <= 0)

    def test_rt60_of_exponential(self):
        assert reverberation_time(_exponential_ir(0.5)) == pytest.approx(0.5, rel=0.01)

    def test_schroeder_of_simulated_rir_is_monotone(self, box, small):
        curve = schroeder_curve(simulate_rir(box, SOURCE, small))
        finite = np.isfinite(curve)
        assert np.all(np.diff(curve[finite]) <= 0)
        assert not np.any(finite[np.argmin(finite):]) or finite.all()

    def test_silent_ir(self):
        with pytest.raises(PropagationError) as exc:
            schroeder_curve(ImpulseResponse(np.zeros(100), 16_000))
        assert exc.value.code == ErrorCode.UNDEFINED_DECAY

    def test_single_impulse_has_no_decay(self):
        samples = np.zeros(100)
        samples[0] = 1.0
        with pytest.raises(PropagationError) as exc:
            reverberation_time(ImpulseResponse(samples, 16_000))
        assert exc.value.code == ErrorCode.UNDEFINED_DECAY

    def test_more_absorption_decays_faster(self):
        cfg = PropagationConfig(rays_per_endpoint=400, max_bounces=30, rir_duration=0.5, block_size=128)
        live = shoebox((5.0, 4.0, 3.0), Material(0.1, 0.3), receiver=(3.5, 1.5, 1.0))
        dead = shoebox((5.0, 4.0, 3.0), Material(0.6, 0.3), receiver=(3.5, 1.5, 1.0))
        assert reverberation_time(simulate_rir(live, SOURCE, cfg)) > reverberation_time(simulate_rir(dead, SOURCE, cfg))


# ===================================================================
# Export
# ===================================================================


class TestExport:
    def test_wav_and_sidecar(self, tmp_path: Path):
        ir = _exponential_ir(0.3, duration=0.5)
        cfg = PropagationConfig(rir_duration=0.5)
        path = export_rir(tmp_path / "rir.wav", ir, cfg, scene_checksum="abc")
        data, rate = sf.read(str(path), dtype="float32")
        assert rate == 16_000
        np.testing.assert_array_equal(data, ir.samples.astype(np.float32))
        side = yaml.safe_load(sidecar_path(path).read_text(encoding="utf-8"))
        assert side["scene_checksum"] == "abc"
        assert side["wav_sha256"] == hashlib.sha256(path.read_bytes()).hexdigest()
        assert side["rt60"] == pytest.approx(0.3, rel=0.02)
        assert side["propagation"]["rays_per_endpoint"] == cfg.rays_per_endpoint

    def test_rt60_null_when_undefined(self, tmp_path: Path):
        samples = np.zeros(100)
        samples[3] = 0.5
        path = export_rir(tmp_path / "rir.wav", ImpulseResponse(samples, 16_000), PropagationConfig())
        side = yaml.safe_load(sidecar_path(path).read_text(encoding="utf-8"))
        assert side["rt60"] is None

    def test_identical_inputs_identical_files(self, tmp_path: Path):
        ir = _exponential_ir(0.3, duration=0.2)
        a = export_rir(tmp_path / "a.wav", ir, PropagationConfig())
        b = export_rir(tmp_path / "b.wav", ir, PropagationConfig())
        assert a.read_bytes() == b.read_bytes()
        assert sidecar_path(a).read_bytes() == sidecar_path(b).read_bytes()


# ===================================================================
# Full-scale checks
# ===================================================================


@pytest.mark.slow
class TestFullScale:
    def test_free_field_amplitude(self):
        scene = open_scene(((-5, -5, -5), (5, 5, 5)), (0.0, 0.0, 0.0))
        ir = simulate_rir(scene, (3.43, 0.0, 0.0), PropagationConfig(rir_duration=0.05))
        assert int(np.argmax(ir.samples)) == 160
        assert ir.samples[160] == pytest.approx(1.0 / (4.0 * np.pi * 3.43), rel=0.05)

    def test_early_arrivals_match_image_sources(self, box):
        cfg = PropagationConfig(rir_duration=0.1)
        traced = simulate_rir(box, SOURCE, cfg)
        reference = image_source_rir((5.0, 4.0, 3.0), SOURCE, tuple(box.receiver), 0.3, 2, cfg)
        for sample in np.flatnonzero(reference.samples):
            window = traced.samples[max(sample - 1, 0):sample + 2]
            assert window.max() > 0
