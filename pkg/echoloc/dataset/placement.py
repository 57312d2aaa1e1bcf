"""
Source placement generators.

* :func:`coordinate_grid` - a uniform lattice over the whole floor plan.
* :func:`region_grid` - a fixed rows x cols grid inside every (shrunk) region.
* :func:`offset_test_grid` - held-out points offset diagonally from a base
  grid, never coinciding with it.

Heights are measured from the floor (``scene.bounds[0].y``).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy.spatial import cKDTree

from echoloc.errors import DatasetError, ErrorCode, RegionAmbiguityError
from echoloc.scene.types import Point3, Scene, region_of
from echoloc.seeding import rng_for

logger = logging.getLogger(__name__)

Split = Literal["train", "test"]

COINCIDENCE_RADIUS = 1e-3
# lattice nodes closer than this to a wall count as on the wall
WALL_TOLERANCE = 1e-9
MIN_CELL_SIZE = 0.05


@dataclass(frozen=True)
class SourcePlacement:
    position: Point3
    region: str | None
    split: Split = "train"

    def to_dict(self) -> dict:
        return {"position": list(self.position), "region": self.region, "split": self.split}


def _floor_y(scene: Scene, height: float) -> float:
    y = scene.bounds[0].y + height
    if not scene.bounds[0].y <= y <= scene.bounds[1].y:
        raise DatasetError(f"height {height} m is outside the scene (0 to {scene.extent[1]:.3f} m)")
    return y


def _lattice(lo: float, extent: float, spacing: float) -> np.ndarray:
    n = int(math.floor(extent / spacing + 1e-9)) + 1
    margin = (extent - (n - 1) * spacing) / 2.0
    return lo + margin + spacing * np.arange(n)


def coordinate_grid(
    scene: Scene,
    spacing: float,
    height: float,
    *,
    split: Split = "train",
) -> list[SourcePlacement]:
    """
    Axis-aligned lattice over the floor plan at ``height`` above the floor.

    Each axis holds ``floor(extent / spacing) + 1`` nodes centered on the
    floor extent. Only nodes strictly inside a region (room) are kept; they
    are labelled with that region. Scenes without regions keep every node
    strictly inside the bounding box, unlabelled.

    Raises
    ------
    DatasetError
        Non-positive spacing, spacing larger than the floor extent, or a
        height outside the scene.
    """
    if spacing <= 0:
        raise DatasetError(f"spacing must be > 0, got {spacing}", ErrorCode.VALIDATION_ERROR)
    ex, ez = float(scene.extent[0]), float(scene.extent[2])
    if spacing > ex or spacing > ez:
        raise DatasetError(
            f"spacing {spacing} m exceeds the floor extent {ex:.3f} x {ez:.3f} m", ErrorCode.VALIDATION_ERROR
        )
    y = _floor_y(scene, height)
    xs = _lattice(scene.bounds[0].x, ex, spacing)
    zs = _lattice(scene.bounds[0].z, ez, spacing)

    boxes = [(r.min.as_array(), r.max.as_array()) for r in scene.regions]
    if not boxes:
        boxes = [(scene.bounds[0].as_array(), scene.bounds[1].as_array())]

    placements = []
    for z in zs:
        for x in xs:
            p = np.array([x, y, z])
            inside = (
                np.all(p[[0, 2]] > lo[[0, 2]] + WALL_TOLERANCE) and np.all(p[[0, 2]] < hi[[0, 2]] - WALL_TOLERANCE)
                for lo, hi in boxes
            )
            if not any(inside):
                continue
            label = region_of(scene, p) if scene.regions else None
            placements.append(SourcePlacement(Point3.of(p), label, split))
    logger.debug("Coordinate grid: %d x %d lattice, %d placements kept", len(xs), len(zs), len(placements))
    return placements


def region_grid(
    scene: Scene,
    rows: int,
    cols: int,
    height: float,
    shrink: float = 0.9,
    *,
    split: Split = "train",
) -> list[SourcePlacement]:
    """
    ``rows x cols`` cell-center points inside every region shrunk by ``shrink``.

    Columns run along x, rows along z. Placements are ordered by region (scene
    order), then row, then column, and each is checked against
    :func:`region_of`.

    Raises
    ------
    DatasetError
        Grid smaller than 1x1, a region whose shrunk cells are smaller than
        5 cm, a height outside a region, or a label mismatch.
    """
    if rows < 1 or cols < 1:
        raise DatasetError(f"grid must be at least 1x1, got {rows}x{cols}", ErrorCode.VALIDATION_ERROR)
    if not scene.regions:
        raise DatasetError("scene has no regions", ErrorCode.VALIDATION_ERROR)
    y = _floor_y(scene, height)
    placements = []
    for region in scene.regions:
        lo, hi = region.shrunk(shrink)
        cell_x, cell_z = (hi[0] - lo[0]) / cols, (hi[2] - lo[2]) / rows
        if min(cell_x, cell_z) < MIN_CELL_SIZE:
            raise DatasetError(
                f"region {region.name!r} is too small for a {rows}x{cols} grid after shrinking by {shrink}",
                ErrorCode.VALIDATION_ERROR,
            )
        if not region.min.y <= y <= region.max.y:
            raise DatasetError(f"height {height} m is outside region {region.name!r}", ErrorCode.VALIDATION_ERROR)
        for i in range(rows):
            for j in range(cols):
                p = np.array([lo[0] + (j + 0.5) * cell_x, y, lo[2] + (i + 0.5) * cell_z])
                if region_of(scene, p) != region.name:
                    raise DatasetError(f"grid point {tuple(p)} does not map back to region {region.name!r}")
                placements.append(SourcePlacement(Point3.of(p), region.name, split))
    return placements


def _offset_candidates(scene: Scene, base: Sequence[SourcePlacement]) -> list[SourcePlacement]:
    pts = np.array([b.position.as_array() for b in base])
    tree = cKDTree(pts)
    nn, _ = tree.query(pts, k=2)
    half = 0.5 * nn[:, 1]

    seen: set[tuple[float, float, float]] = set()
    out: list[SourcePlacement] = []
    for p, h in zip(pts, half):
        for sx, sz in ((-1, -1), (-1, 1), (1, -1), (1, 1)):
            c = p + np.array([sx * h, 0.0, sz * h])
            key = tuple(np.round(c, 6))
            if key in seen:
                continue
            seen.add(key)
            if not scene.contains(c) or tree.query(c)[0] <= COINCIDENCE_RADIUS:
                continue
            try:
                label = region_of(scene, c)
            except RegionAmbiguityError:
                continue
            if label is None and scene.regions:
                continue
            out.append(SourcePlacement(Point3.of(c), label, "test"))
    return out


def offset_test_grid(
    scene: Scene,
    base: Sequence[SourcePlacement],
    count: int,
    seed: int,
) -> list[SourcePlacement]:
    """
    Pick ``count`` test placements offset from the ``base`` grid.

    Candidates sit at the four diagonal offsets of half the nearest-neighbour
    spacing around each base node. Candidates within 1 mm of a base node,
    outside every region, or on a region boundary are rejected. One candidate
    per region is drawn first so that every region is covered, the rest are
    drawn uniformly; the selection is deterministic for a given ``seed``.

    Raises
    ------
    DatasetError
        Fewer than two base points, ``count`` smaller than the number of
        regions, a region without candidates, or ``count`` larger than the
        number of candidates.
    """
    if len(base) < 2:
        raise DatasetError("offset test grid needs at least two base points", ErrorCode.VALIDATION_ERROR)
    candidates = _offset_candidates(scene, base)
    regions = scene.region_names
    if count < len(regions):
        raise DatasetError(
            f"{count} test points cannot cover {len(regions)} regions", ErrorCode.VALIDATION_ERROR
        )
    if count > len(candidates):
        raise DatasetError(
            f"requested {count} test points but only {len(candidates)} offset positions exist",
            ErrorCode.VALIDATION_ERROR,
        )
    rng = rng_for(seed, "test-grid")
    chosen: set[int] = set()
    for name in regions:
        idx = [i for i, c in enumerate(candidates) if c.region == name]
        if not idx:
            raise DatasetError(f"region {name!r} has no offset positions", ErrorCode.VALIDATION_ERROR)
        chosen.add(idx[int(rng.integers(len(idx)))])
    rest = [i for i in range(len(candidates)) if i not in chosen]
    extra = rng.choice(len(rest), size=count - len(chosen), replace=False) if count > len(chosen) else []
    chosen.update(rest[int(k)] for k in extra)
    return [candidates[i] for i in sorted(chosen)]
