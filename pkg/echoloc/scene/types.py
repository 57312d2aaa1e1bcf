"""
Scene data model: points, materials, surfaces, regions and the immutable
:class:`Scene` with its ray queries.

Coordinates are meters. The ``y`` axis is vertical; the floor plan lives in
the ``x``/``z`` plane.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from echoloc.errors import RegionAmbiguityError, SceneValidationError
from echoloc.scene.bvh import BVH, INTERSECT_EPSILON

MIN_TRIANGLE_AREA = 1e-9
DEFAULT_REGION_SHRINK = 0.9


# ---------------------------------------------------------------------------
# Value types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    def __iter__(self) -> Iterator[float]:
        return iter((self.x, self.y, self.z))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    @classmethod
    def of(cls, value: Point3 | Sequence[float] | np.ndarray) -> Point3:
        if isinstance(value, Point3):
            return value
        x, y, z = (float(v) for v in value)
        return cls(x, y, z)

    def distance_to(self, other: Point3 | Sequence[float]) -> float:
        return float(np.linalg.norm(self.as_array() - Point3.of(other).as_array()))


@dataclass(frozen=True)
class Material:
    """Broadband acoustic material.

    ``absorption`` is the fraction of incident energy absorbed per
    reflection; ``scattering`` the fraction of reflected energy scattered
    diffusely (the remainder reflects specularly). Frequency-dependent
    materials would replace these scalars with per-band arrays.
    """

    absorption: float
    scattering: float = 0.0
    name: str = ""

    def validate(self) -> list[str]:
        errors = []
        if not 0.0 <= self.absorption <= 1.0:
            errors.append(f"material {self.name!r}: absorption {self.absorption} outside [0, 1]")
        if not 0.0 <= self.scattering <= 1.0:
            errors.append(f"material {self.name!r}: scattering {self.scattering} outside [0, 1]")
        return errors


@dataclass(frozen=True)
class Surface:
    triangles: tuple[tuple[int, int, int], ...]
    material_id: int
    name: str = ""


@dataclass(frozen=True)
class Region:
    name: str
    min: Point3
    max: Point3

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.min.as_array() + self.max.as_array())

    @property
    def size(self) -> np.ndarray:
        return self.max.as_array() - self.min.as_array()

    def shrunk(self, factor: float) -> tuple[np.ndarray, np.ndarray]:
        """Bounds scaled by ``factor`` about the centroid."""
        half = 0.5 * self.size * factor
        return self.center - half, self.center + half

    def contains(self, p: np.ndarray, shrink: float = 1.0) -> bool:
        lo, hi = self.shrunk(shrink)
        return bool(np.all(p >= lo) and np.all(p <= hi))


@dataclass(frozen=True)
class RayHit:
    distance: float
    point: Point3
    normal: tuple[float, float, float]
    material_id: int
    triangle: int


# ---------------------------------------------------------------------------
# Scene
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Scene:
    """
    Immutable triangle-mesh scene.

    Build through :func:`make_scene` (or the loaders), which validates the
    invariants; direct construction skips validation. Watertightness is not
    required: rays leaving through an opening simply miss.

    Attributes
    ----------
    vertices:
        ``(V, 3)`` float array.
    surfaces:
        Surfaces referencing ``vertices`` by index.
    materials:
        Material table indexed by ``Surface.material_id``.
    regions:
        Named axis-aligned boxes partitioning the floor plan.
    receiver / facing:
        Receiver position and unit facing vector (stored, not used by
        propagation; the receiver is omnidirectional).
    bounds:
        ``(min, max)`` corners of the scene bounding box.
    """

    vertices: np.ndarray
    surfaces: tuple[Surface, ...]
    materials: tuple[Material, ...]
    regions: tuple[Region, ...]
    receiver: Point3
    facing: tuple[float, float, float]
    bounds: tuple[Point3, Point3]
    # Flattened per-triangle arrays, derived in __post_init__.
    triangles: np.ndarray = field(init=False, repr=False)
    triangle_material: np.ndarray = field(init=False, repr=False)
    triangle_absorption: np.ndarray = field(init=False, repr=False)
    triangle_scattering: np.ndarray = field(init=False, repr=False)
    _bvh: BVH = field(init=False, repr=False)

    def __post_init__(self) -> None:
        verts = np.ascontiguousarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        tris = [t for s in self.surfaces for t in s.triangles]
        mats = [s.material_id for s in self.surfaces for _ in s.triangles]
        tri_arr = np.asarray(tris, dtype=np.int64).reshape(-1, 3)
        mat_arr = np.asarray(mats, dtype=np.int64)
        absorption = np.array([self.materials[m].absorption for m in mat_arr], dtype=np.float64)
        scattering = np.array([self.materials[m].scattering for m in mat_arr], dtype=np.float64)
        for arr in (verts, tri_arr, mat_arr, absorption, scattering):
            arr.flags.writeable = False
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "triangles", tri_arr)
        object.__setattr__(self, "triangle_material", mat_arr)
        object.__setattr__(self, "triangle_absorption", absorption)
        object.__setattr__(self, "triangle_scattering", scattering)
        corners = verts[tri_arr] if len(tri_arr) else np.zeros((0, 3, 3))
        object.__setattr__(self, "_bvh", BVH(corners))

    # ------------------------------------------------------------------
    # Properties
    # ------------------------------------------------------------------

    @property
    def bvh(self) -> BVH:
        return self._bvh

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    @property
    def region_names(self) -> list[str]:
        return [r.name for r in self.regions]

    @property
    def extent(self) -> np.ndarray:
        return self.bounds[1].as_array() - self.bounds[0].as_array()

    def contains(self, p: Point3 | Sequence[float]) -> bool:
        """True if ``p`` lies inside the bounding box (inclusive)."""
        a = Point3.of(p).as_array()
        return bool(np.all(a >= self.bounds[0].as_array()) and np.all(a <= self.bounds[1].as_array()))

    def region(self, name: str) -> Region:
        for r in self.regions:
            if r.name == name:
                return r
        raise KeyError(name)

    def with_receiver(
        self,
        position: Point3 | Sequence[float],
        facing: Sequence[float] | None = None,
    ) -> Scene:
        """Validated copy of this scene with another receiver pose."""
        return make_scene(
            vertices=self.vertices,
            surfaces=self.surfaces,
            materials=self.materials,
            regions=self.regions,
            receiver=Point3.of(position),
            facing=tuple(facing) if facing is not None else self.facing,
            bounds=self.bounds,
        )


# ---------------------------------------------------------------------------
# Construction and validation
# ---------------------------------------------------------------------------

def validate_scene_parts(
    vertices: np.ndarray,
    surfaces: Sequence[Surface],
    materials: Sequence[Material],
    regions: Sequence[Region],
    receiver: Point3,
    facing: Sequence[float],
    bounds: tuple[Point3, Point3],
) -> list[str]:
    """Return a list of invariant violations, empty if the parts are valid."""
    errors: list[str] = []
    verts = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    if not np.all(np.isfinite(verts)):
        errors.append("vertices must be finite")

    for m in materials:
        errors.extend(m.validate())

    for si, surface in enumerate(surfaces):
        if not 0 <= surface.material_id < len(materials):
            errors.append(
                f"surface {si} ({surface.name!r}) references unknown material id {surface.material_id}"
            )
        for ti, tri in enumerate(surface.triangles):
            if len(tri) != 3 or any(not 0 <= int(i) < len(verts) for i in tri):
                errors.append(f"surface {si} triangle {ti} has vertex index out of range: {tuple(tri)}")
                continue
            a, b, c = verts[list(tri)]
            area = 0.5 * np.linalg.norm(np.cross(b - a, c - a))
            if area <= MIN_TRIANGLE_AREA:
                errors.append(f"surface {si} triangle {ti} is degenerate (area {area:.3g} m^2)")

    names = [r.name for r in regions]
    if len(set(names)) != len(names):
        errors.append("region names must be unique")
    for r in regions:
        if not np.all(r.min.as_array() < r.max.as_array()):
            errors.append(f"region {r.name!r}: min must be < max on every axis")
    for i in range(len(regions)):
        for j in range(i + 1, len(regions)):
            lo = np.maximum(regions[i].min.as_array(), regions[j].min.as_array())
            hi = np.minimum(regions[i].max.as_array(), regions[j].max.as_array())
            if np.all(hi - lo > 1e-9):
                errors.append(f"regions {regions[i].name!r} and {regions[j].name!r} overlap")

    lo, hi = bounds[0].as_array(), bounds[1].as_array()
    if not np.all(lo < hi):
        errors.append("bounding box min must be < max on every axis")
    rec = receiver.as_array()
    if not (np.all(np.isfinite(rec)) and np.all(rec >= lo) and np.all(rec <= hi)):
        errors.append(f"receiver {tuple(rec)} lies outside the bounding box")
    f = np.asarray(facing, dtype=np.float64)
    if f.shape != (3,) or abs(np.linalg.norm(f) - 1.0) > 1e-6:
        errors.append("receiver facing must be a unit 3-vector")
    return errors


def make_scene(
    *,
    vertices: np.ndarray | Sequence[Sequence[float]],
    surfaces: Sequence[Surface],
    materials: Sequence[Material],
    regions: Sequence[Region] = (),
    receiver: Point3 | Sequence[float],
    facing: Sequence[float] = (0.0, 0.0, 1.0),
    bounds: tuple[Point3, Point3] | None = None,
) -> Scene:
    """Validate the parts and build a :class:`Scene`.

    ``bounds`` defaults to the axis-aligned box of the vertices; it must be
    given explicitly for scenes without geometry.

    Raises
    ------
    SceneValidationError
        If any scene invariant is violated.
    """
    verts = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    receiver = Point3.of(receiver)
    if bounds is None:
        if len(verts) == 0:
            raise SceneValidationError("a scene without vertices needs explicit bounds")
        bounds = (Point3.of(verts.min(axis=0)), Point3.of(verts.max(axis=0)))
    else:
        bounds = (Point3.of(bounds[0]), Point3.of(bounds[1]))
    facing = tuple(float(v) for v in facing)
    errors = validate_scene_parts(verts, surfaces, materials, regions, receiver, facing, bounds)
    if errors:
        raise SceneValidationError("; ".join(errors))
    return Scene(
        vertices=verts,
        surfaces=tuple(surfaces),
        materials=tuple(materials),
        regions=tuple(regions),
        receiver=receiver,
        facing=facing,  # type: ignore[arg-type]
        bounds=bounds,
    )


def open_scene(
    bounds: tuple[Sequence[float], Sequence[float]],
    receiver: Point3 | Sequence[float],
) -> Scene:
    """Scene without geometry (free field) inside ``bounds``."""
    return make_scene(
        vertices=np.zeros((0, 3)),
        surfaces=(),
        materials=(),
        receiver=receiver,
        bounds=(Point3.of(bounds[0]), Point3.of(bounds[1])),
    )


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------

def intersect(
    scene: Scene,
    origin: Point3 | Sequence[float],
    direction: Sequence[float],
) -> RayHit | None:
    """Nearest hit farther than :data:`INTERSECT_EPSILON`, or ``None``.

    Raises
    ------
    ValueError
        If ``direction`` is not a unit vector (tolerance 1e-6).
    """
    o = Point3.of(origin).as_array()
    d = np.asarray(direction, dtype=np.float64)
    if d.shape != (3,) or abs(np.linalg.norm(d) - 1.0) > 1e-6:
        raise ValueError("direction must be a unit 3-vector")
    t, tri = scene.bvh.closest_hits(o[None, :], d[None, :])
    if tri[0] < 0:
        return None
    return _make_hit(scene, o, d, float(t[0]), int(tri[0]))


def intersect_brute_force(
    scene: Scene,
    origin: Point3 | Sequence[float],
    direction: Sequence[float],
) -> RayHit | None:
    """Reference all-triangle intersection used to check the BVH."""
    o = Point3.of(origin).as_array()
    d = np.asarray(direction, dtype=np.float64)
    t, tri = scene.bvh.closest_hits_brute_force(o[None, :], d[None, :])
    if tri[0] < 0:
        return None
    return _make_hit(scene, o, d, float(t[0]), int(tri[0]))


def _make_hit(scene: Scene, o: np.ndarray, d: np.ndarray, t: float, tri: int) -> RayHit:
    normal = scene.bvh.normals[tri]
    if np.dot(normal, d) > 0:
        normal = -normal
    return RayHit(
        distance=t,
        point=Point3.of(o + t * d),
        normal=(float(normal[0]), float(normal[1]), float(normal[2])),
        material_id=int(scene.triangle_material[tri]),
        triangle=tri,
    )


def region_of(
    scene: Scene,
    p: Point3 | Sequence[float],
    shrink: float = 1.0,
) -> str | None:
    """Name of the unique region containing ``p``, or ``None``.

    Region bounds are inclusive and optionally scaled by ``shrink`` about
    their centroids.

    Raises
    ------
    RegionAmbiguityError
        If more than one region claims ``p``.
    """
    a = Point3.of(p).as_array()
    hits = [r.name for r in scene.regions if r.contains(a, shrink)]
    if len(hits) > 1:
        raise RegionAmbiguityError(f"point {tuple(a)} lies in several regions: {hits}")
    return hits[0] if hits else None
