"""
Procedural floor-plan builder.

A floor plan is a set of axis-aligned room boxes sharing one floor and one
ceiling height, plus rectangular door openings on walls shared by two rooms.
:func:`build_house` turns it into a closed triangle mesh with door holes and
one :class:`Region` per room. :func:`shoebox` and :func:`house10` are the two
built-in presets.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from echoloc.errors import FloorPlanError
from echoloc.scene.types import Material, Point3, Region, Scene, Surface, make_scene

logger = logging.getLogger(__name__)

_TOL = 1e-9

# Floor-plan axes: x (index 0) and z (index 2). A wall line is identified by
# the axis it is perpendicular to and its coordinate on that axis.
_PLAN_AXES = (0, 2)


@dataclass(frozen=True)
class RoomBox:
    name: str
    min: tuple[float, float, float]
    max: tuple[float, float, float]

    def lo(self, axis: int) -> float:
        return float(self.min[axis])

    def hi(self, axis: int) -> float:
        return float(self.max[axis])

    def contains(self, p: Sequence[float]) -> bool:
        return all(self.min[i] - _TOL <= p[i] <= self.max[i] + _TOL for i in range(3))


@dataclass(frozen=True)
class Door:
    """Rectangular opening from the floor up to ``height``.

    ``position`` is the door center along the shared wall; ``None`` centers
    the door on the shared segment.
    """

    room_a: str
    room_b: str
    width: float = 0.9
    height: float = 2.1
    position: float | None = None


@dataclass(frozen=True)
class _Opening:
    perp_axis: int
    coord: float
    lo: float
    hi: float
    height: float


def _shared_wall(a: RoomBox, b: RoomBox) -> tuple[int, float, float, float] | None:
    """``(perp_axis, coord, lo, hi)`` of the wall segment shared by two rooms."""
    for perp in _PLAN_AXES:
        along = 2 if perp == 0 else 0
        for x, y in ((a.hi(perp), b.lo(perp)), (b.hi(perp), a.lo(perp))):
            if abs(x - y) <= _TOL:
                lo = max(a.lo(along), b.lo(along))
                hi = min(a.hi(along), b.hi(along))
                if hi - lo > _TOL:
                    return perp, x, lo, hi
    return None


def _validate_plan(rooms: Sequence[RoomBox]) -> tuple[float, float]:
    if not rooms:
        raise FloorPlanError("floor plan has no rooms")
    names = [r.name for r in rooms]
    if len(set(names)) != len(names):
        raise FloorPlanError("room names must be unique")
    floor, ceiling = rooms[0].lo(1), rooms[0].hi(1)
    for r in rooms:
        if not all(r.max[i] - r.min[i] > _TOL for i in range(3)):
            raise FloorPlanError(f"room {r.name!r} has non-positive size")
        if abs(r.lo(1) - floor) > _TOL or abs(r.hi(1) - ceiling) > _TOL:
            raise FloorPlanError(f"room {r.name!r} does not share the common floor and ceiling")
    for i, a in enumerate(rooms):
        for b in rooms[i + 1:]:
            overlap = [min(a.hi(k), b.hi(k)) - max(a.lo(k), b.lo(k)) for k in _PLAN_AXES]
            if all(o > _TOL for o in overlap):
                raise FloorPlanError(f"rooms {a.name!r} and {b.name!r} overlap")
    return floor, ceiling


def _door_opening(door: Door, by_name: dict[str, RoomBox], floor: float, ceiling: float) -> _Opening:
    for name in (door.room_a, door.room_b):
        if name not in by_name:
            raise FloorPlanError(f"door references unknown room {name!r}")
    shared = _shared_wall(by_name[door.room_a], by_name[door.room_b])
    if shared is None:
        raise FloorPlanError(f"door {door.room_a!r}-{door.room_b!r} is not on a shared wall")
    perp, coord, lo, hi = shared
    if door.width <= 0 or door.height <= 0:
        raise FloorPlanError(f"door {door.room_a!r}-{door.room_b!r} must have positive size")
    if door.width > hi - lo + _TOL:
        raise FloorPlanError(
            f"door {door.room_a!r}-{door.room_b!r} is {door.width} m wide but the shared wall is {hi - lo:.3f} m"
        )
    if door.height > ceiling - floor + _TOL:
        raise FloorPlanError(f"door {door.room_a!r}-{door.room_b!r} is taller than the rooms")
    center = 0.5 * (lo + hi) if door.position is None else door.position
    d_lo, d_hi = center - 0.5 * door.width, center + 0.5 * door.width
    if d_lo < lo - _TOL or d_hi > hi + _TOL:
        raise FloorPlanError(f"door {door.room_a!r}-{door.room_b!r} is not on a shared wall")
    return _Opening(perp, coord, d_lo, d_hi, floor + min(door.height, ceiling - floor))


class _MeshBuilder:
    def __init__(self) -> None:
        self.vertices: list[tuple[float, float, float]] = []
        self._index: dict[tuple[float, float, float], int] = {}
        self.triangles: list[tuple[int, int, int]] = []

    def vertex(self, p: Sequence[float]) -> int:
        key = tuple(round(float(c), 9) for c in p)
        idx = self._index.get(key)
        if idx is None:
            idx = len(self.vertices)
            self._index[key] = idx
            self.vertices.append(key)  # type: ignore[arg-type]
        return idx

    def quad(self, a, b, c, d) -> None:
        ia, ib, ic, id_ = (self.vertex(p) for p in (a, b, c, d))
        self.triangles.append((ia, ib, ic))
        self.triangles.append((ia, ic, id_))


def _wall_point(perp: int, coord: float, along: float, y: float) -> tuple[float, float, float]:
    return (coord, y, along) if perp == 0 else (along, y, coord)


def build_house(
    rooms: Sequence[RoomBox],
    doors: Sequence[Door],
    wall_material: Material,
    receiver: Point3 | Sequence[float],
    facing: Sequence[float] = (0.0, 0.0, 1.0),
) -> Scene:
    """
    Build a closed multi-room mesh with door holes.

    Each wall line is split at every room edge and door edge; segments covered
    by a door keep only the lintel above the opening. Floors and ceilings are
    emitted per room. One region is produced per room, in plan order.

    Raises
    ------
    FloorPlanError
        Overlapping rooms, mismatched floor/ceiling heights, a door that is
        not on a shared wall or is wider than it, or a receiver outside every
        room.
    """
    floor, ceiling = _validate_plan(rooms)
    by_name = {r.name: r for r in rooms}
    openings = [_door_opening(d, by_name, floor, ceiling) for d in doors]
    rec = Point3.of(receiver)
    if not any(r.contains(tuple(rec)) for r in rooms):
        raise FloorPlanError(f"receiver {tuple(rec)} is not inside any room")

    # Wall faces per line: (perp_axis, coord) -> list of (lo, hi) along the wall.
    lines: dict[tuple[int, float], list[tuple[float, float]]] = {}
    for r in rooms:
        for perp in _PLAN_AXES:
            along = 2 if perp == 0 else 0
            for coord in (r.lo(perp), r.hi(perp)):
                key = (perp, round(coord, 9))
                lines.setdefault(key, []).append((r.lo(along), r.hi(along)))

    mesh = _MeshBuilder()
    for (perp, coord), spans in sorted(lines.items()):
        doors_here = [o for o in openings if o.perp_axis == perp and abs(o.coord - coord) <= _TOL]
        cuts = sorted({c for s in spans for c in s} | {c for o in doors_here for c in (o.lo, o.hi)})
        for a, b in zip(cuts, cuts[1:]):
            if b - a <= _TOL:
                continue
            mid = 0.5 * (a + b)
            if not any(lo - _TOL <= mid <= hi + _TOL for lo, hi in spans):
                continue
            door = next((o for o in doors_here if o.lo - _TOL <= mid <= o.hi + _TOL), None)
            bottom = floor if door is None else door.height
            if ceiling - bottom <= _TOL:
                continue
            mesh.quad(
                _wall_point(perp, coord, a, bottom),
                _wall_point(perp, coord, b, bottom),
                _wall_point(perp, coord, b, ceiling),
                _wall_point(perp, coord, a, ceiling),
            )

    for r in rooms:
        x0, x1, z0, z1 = r.lo(0), r.hi(0), r.lo(2), r.hi(2)
        for y in (floor, ceiling):
            mesh.quad((x0, y, z0), (x1, y, z0), (x1, y, z1), (x0, y, z1))

    lo = np.min([r.min for r in rooms], axis=0)
    hi = np.max([r.max for r in rooms], axis=0)
    regions = [Region(r.name, Point3.of(r.min), Point3.of(r.max)) for r in rooms]
    scene = make_scene(
        vertices=np.asarray(mesh.vertices, dtype=np.float64),
        surfaces=[Surface(tuple(mesh.triangles), 0, "walls")],
        materials=[wall_material],
        regions=regions,
        receiver=rec,
        facing=facing,
        bounds=(Point3.of(lo), Point3.of(hi)),
    )
    logger.debug("Built house: %d rooms, %d doors, %d triangles", len(rooms), len(doors), scene.num_triangles)
    return scene


def shoebox(
    dims: Sequence[float],
    material: Material,
    receiver: Point3 | Sequence[float] | None = None,
    facing: Sequence[float] = (0.0, 0.0, 1.0),
) -> Scene:
    """Closed box ``[0, dims]`` with 12 triangles and one region ``"room"``.

    The receiver defaults to the box center.
    """
    dx, dy, dz = (float(v) for v in dims)
    if receiver is None:
        receiver = (dx / 2, dy / 2, dz / 2)
    return build_house([RoomBox("room", (0.0, 0.0, 0.0), (dx, dy, dz))], [], material, receiver, facing)


# ---------------------------------------------------------------------------
# Ten-room preset
# ---------------------------------------------------------------------------

HOUSE10_EXTENT = (15.6, 4.4, 8.3)
HOUSE10_RECEIVER = (1.2, 1.5, 1.2)
HOUSE10_MATERIAL = Material(absorption=0.2, scattering=0.3, name="plaster")

_COLUMNS = (0.0, 3.2, 6.4, 9.4, 12.6, 15.6)
_ROW_SPLIT = 4.0
_SOUTH = ("entry", "living", "dining", "kitchen", "laundry")
_NORTH = ("bedroom_1", "bath_1", "hall", "bedroom_2", "office")


def house10_plan() -> tuple[list[RoomBox], list[Door]]:
    """Rooms and doors of the ten-room preset (two rows of five rooms)."""
    width, height, depth = HOUSE10_EXTENT
    rooms: list[RoomBox] = []
    for names, (z0, z1) in ((_SOUTH, (0.0, _ROW_SPLIT)), (_NORTH, (_ROW_SPLIT, depth))):
        for name, x0, x1 in zip(names, _COLUMNS, _COLUMNS[1:]):
            rooms.append(RoomBox(name, (x0, 0.0, z0), (x1, height, z1)))
    doors = [Door(a, b) for row in (_SOUTH, _NORTH) for a, b in zip(row, row[1:])]
    doors += [Door("entry", "bedroom_1"), Door("dining", "hall")]
    return rooms, doors


def house10(
    material: Material = HOUSE10_MATERIAL,
    receiver: Point3 | Sequence[float] = HOUSE10_RECEIVER,
) -> Scene:
    """Ten-room house spanning 15.6 x 4.4 x 8.3 m, receiver in the entry."""
    rooms, doors = house10_plan()
    return build_house(rooms, doors, material, receiver)


PRESETS = {"house10": house10, "shoebox": lambda: shoebox((5.0, 4.0, 3.0), Material(0.3, name="plaster"))}
