"""Scene geometry, materials, regions and ray queries."""

from echoloc.scene.bvh import BVH, INTERSECT_EPSILON
from echoloc.scene.format import SCENE_FORMAT, load_scene, save_scene, scene_checksum
from echoloc.scene.house import Door, RoomBox, build_house, house10, shoebox
from echoloc.scene.types import (
    Material,
    Point3,
    RayHit,
    Region,
    Scene,
    Surface,
    intersect,
    intersect_brute_force,
    make_scene,
    open_scene,
    region_of,
)

__all__ = [
    "BVH",
    "INTERSECT_EPSILON",
    "SCENE_FORMAT",
    "Door",
    "Material",
    "Point3",
    "RayHit",
    "Region",
    "RoomBox",
    "Scene",
    "Surface",
    "build_house",
    "house10",
    "intersect",
    "intersect_brute_force",
    "load_scene",
    "make_scene",
    "open_scene",
    "region_of",
    "save_scene",
    "scene_checksum",
    "shoebox",
]
