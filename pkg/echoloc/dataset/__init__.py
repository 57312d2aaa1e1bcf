"""Placement grids, dataset rendering and manifests."""

from echoloc.dataset.manifest import (
    MANIFEST_FORMAT,
    DatasetManifest,
    ManifestEntry,
    assign_folds,
    load_manifest,
)
from echoloc.dataset.placement import SourcePlacement, coordinate_grid, offset_test_grid, region_grid
from echoloc.dataset.render import render_dataset
from echoloc.dataset.store import SpectrogramStore

__all__ = [
    "MANIFEST_FORMAT",
    "DatasetManifest",
    "ManifestEntry",
    "SourcePlacement",
    "SpectrogramStore",
    "assign_folds",
    "coordinate_grid",
    "load_manifest",
    "offset_test_grid",
    "region_grid",
    "render_dataset",
]
