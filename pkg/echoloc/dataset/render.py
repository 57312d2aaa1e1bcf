"""
Dataset rendering: RIR -> convolution -> STFT -> spectrogram file, per
placement.

Placements are rendered concurrently (``threads`` at a time, each in a
worker thread); the manifest is assembled afterwards in placement-index
order so its content does not depend on scheduling. Rendering is resumable:
finished placements are recorded in ``manifest.partial.json`` as they
complete, and a placement is skipped when a manifest (finished or partial)
in the output directory was produced from the same inputs and its file
still matches the recorded checksum.
"""

from __future__ import annotations

import asyncio
import hashlib
import logging
from dataclasses import asdict, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from echoloc.audio.clip import AudioClip
from echoloc.audio.convolve import convolve
from echoloc.audio.loudness import loudness_normalize, peak_normalize
from echoloc.audio.spectrogram import stft
from echoloc.config import EcholocConfig
from echoloc.dataset.manifest import (
    MANIFEST_NAME,
    PARTIAL_NAME,
    DatasetManifest,
    ManifestEntry,
    assign_folds,
    load_manifest,
)
from echoloc.dataset.placement import SourcePlacement
from echoloc.dataset.store import SpectrogramStore
from echoloc.errors import DatasetError, EcholocError, ErrorCode
from echoloc.propagation.tracer import simulate_rir
from echoloc.scene.format import scene_checksum as compute_scene_checksum
from echoloc.scene.types import Scene
from echoloc.seeding import derive_seed

logger = logging.getLogger(__name__)


class _Aborted(Exception):
    """A placement skipped because another one already failed."""


def clip_checksum(clip: AudioClip) -> str:
    h = hashlib.sha256()
    h.update(str(clip.sample_rate).encode("ascii"))
    h.update(np.ascontiguousarray(clip.samples, dtype="<f8").tobytes())
    return h.hexdigest()


def prepare_dry(dry: AudioClip, config: EcholocConfig) -> AudioClip:
    """Center and peak-normalize, then loudness-normalize the dry clip."""
    peaked = peak_normalize(dry, config.audio.peak_target_db)
    return loudness_normalize(peaked, config.audio.loudness_target_lufs)


def config_echo(config: EcholocConfig, scene: Scene, stream: str = "rir") -> dict:
    return {
        "seed": config.run.seed,
        "stream": stream,
        "receiver": list(scene.receiver),
        "propagation": asdict(config.propagation),
        "audio": asdict(config.audio),
        "dataset": asdict(config.dataset),
    }


def render_placement(
    scene: Scene,
    placement: SourcePlacement,
    index: int,
    dry: AudioClip,
    config: EcholocConfig,
    store: SpectrogramStore,
    stream: str = "rir",
) -> str:
    """Render one placement and return the spectrogram checksum.

    The propagation seed for placement ``i`` is
    ``derive_seed(run.seed, stream, i)``.
    """
    prop = replace(config.propagation, seed=derive_seed(config.run.seed, stream, index))
    ir = simulate_rir(scene, placement.position, prop)
    wet = convolve(dry, ir, peak_db=config.audio.anti_clip_db)
    spec = stft(wet, config.audio.window_length, config.audio.hop, floor_db=config.audio.floor_db)
    spec.metadata.update(
        index=index,
        position=list(placement.position),
        region=placement.region,
        split=placement.split,
        anti_clip_gain=float(wet.metadata.get("anti_clip_gain", 1.0)),
    )
    return store.write(index, spec)


def _reusable(
    output_dir: Path,
    scene_sum: str,
    dry_sum: str,
    echo: dict,
    placements: Sequence[SourcePlacement],
) -> dict[int, str]:
    """Checksums from a previous run with identical inputs, by index.

    A finished manifest is preferred; otherwise the partial manifest of an
    interrupted run is used.
    """
    for name in (MANIFEST_NAME, PARTIAL_NAME):
        if not (output_dir / name).is_file():
            continue
        try:
            prior = load_manifest(output_dir / name)
        except EcholocError:
            logger.warning("Ignoring unreadable %s in %s", name, output_dir)
            continue
        if (prior.scene_checksum, prior.dry_checksum, prior.config) != (scene_sum, dry_sum, echo):
            continue
        return {
            e.index: e.checksum
            for e in prior.entries
            if e.index < len(placements) and e.placement == placements[e.index]
        }
    return {}


async def render_dataset(
    scene: Scene,
    placements: Sequence[SourcePlacement],
    dry: AudioClip,
    config: EcholocConfig,
    output_dir: str | Path,
    *,
    mode: str = "regions",
    threads: int = 1,
    folds: int | None = None,
    stream: str = "rir",
) -> DatasetManifest:
    """
    Render every placement and write ``<output_dir>/manifest.json``.

    ``folds`` (if given) assigns stratified folds to the train placements
    with :func:`assign_folds` seeded by ``config.run.seed``. ``stream``
    labels the per-placement propagation seeds, so a held-out set rendered
    into another directory does not share noise with the training set.

    Raises
    ------
    DatasetError
        For placements outside the scene, or wrapping any propagation or
        audio error with the failing placement index attached. Placements
        finished before the failure stay recorded for the next run.
    """
    for i, p in enumerate(placements):
        if not scene.contains(p.position):
            raise DatasetError("position lies outside the scene", ErrorCode.SOURCE_OUTSIDE, placement_index=i)
        if mode == "regions" and not p.region:
            raise DatasetError("classification placement has no region", placement_index=i)

    store = SpectrogramStore(output_dir)
    scene_sum = compute_scene_checksum(scene)
    dry_sum = clip_checksum(dry)
    echo = config_echo(config, scene, stream)
    prepared = prepare_dry(dry, config)
    reuse = _reusable(store.root, scene_sum, dry_sum, echo, placements)

    def manifest_of(checksums: dict[int, str]) -> DatasetManifest:
        return DatasetManifest(
            mode=mode,
            scene_checksum=scene_sum,
            dry_checksum=dry_sum,
            config=echo,
            classes=scene.region_names,
            entries=[
                ManifestEntry(index=i, placement=placements[i], path=store.relative_path(i), checksum=c)
                for i, c in sorted(checksums.items())
            ],
            root=store.root,
        )

    sem = asyncio.Semaphore(max(1, threads))
    finished: dict[int, str] = {}
    failed = False

    async def one(i: int, placement: SourcePlacement) -> None:
        nonlocal failed
        prior = reuse.get(i)
        if prior is not None and store.verify(i, prior):
            finished[i] = prior
            return
        async with sem:
            if failed:
                raise _Aborted
            try:
                checksum = await asyncio.to_thread(
                    render_placement, scene, placement, i, prepared, config, store, stream
                )
            except DatasetError:
                failed = True
                raise
            except EcholocError as e:
                failed = True
                raise DatasetError(str(e), e.code or ErrorCode.DATASET_ERROR, placement_index=i) from e
        finished[i] = checksum
        manifest_of(finished).save(store.root / PARTIAL_NAME)
        logger.info("Rendered placement %d/%d", i + 1, len(placements))

    results = await asyncio.gather(*(one(i, p) for i, p in enumerate(placements)), return_exceptions=True)
    errors = [r for r in results if isinstance(r, BaseException) and not isinstance(r, _Aborted)]
    if errors:
        raise errors[0]
    rendered = len(placements) - sum(1 for i in finished if reuse.get(i) == finished[i])
    logger.info("Rendered %d placements, reused %d", rendered, len(placements) - rendered)

    manifest = manifest_of(finished)
    if folds is not None:
        manifest = assign_folds(manifest, folds, config.run.seed)
    manifest.save()
    (store.root / PARTIAL_NAME).unlink(missing_ok=True)
    return manifest
