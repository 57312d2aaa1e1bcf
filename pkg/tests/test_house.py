"""
Tests for the floor-plan mesh builder and the preset scenes.
"""

from __future__ import annotations

import numpy as np
import pytest

from echoloc.errors import ErrorCode, FloorPlanError
from echoloc.scene.house import (
    HOUSE10_EXTENT,
    HOUSE10_RECEIVER,
    PRESETS,
    Door,
    RoomBox,
    build_house,
    house10,
    house10_plan,
    shoebox,
)
from echoloc.scene.types import Material, intersect, region_of

WALL = Material(0.2, 0.3, "plaster")


def _two_rooms():
    return [RoomBox("a", (0, 0, 0), (3, 2.5, 4)), RoomBox("b", (3, 0, 0), (6, 2.5, 4))]


# ===================================================================
# Shoebox
# ===================================================================


class TestShoebox:
    def test_twelve_triangles(self):
        scene = shoebox((5.0, 4.0, 3.0), WALL)
        assert scene.num_triangles == 12
        assert len(scene.vertices) == 8
        assert scene.region_names == ["room"]

    def test_receiver_defaults_to_center(self):
        scene = shoebox((5.0, 4.0, 3.0), WALL)
        assert tuple(scene.receiver) == (2.5, 2.0, 1.5)

    def test_closed(self):
        scene = shoebox((5.0, 4.0, 3.0), WALL)
        rng = np.random.default_rng(0)
        for _ in range(100):
            d = rng.standard_normal(3)
            d /= np.linalg.norm(d)
            assert intersect(scene, scene.receiver, d) is not None


# ===================================================================
# Ten-room preset
# ===================================================================


class TestHouse10:
    def test_extent_and_regions(self):
        scene = house10()
        np.testing.assert_allclose(scene.extent, HOUSE10_EXTENT)
        assert len(scene.regions) == 10
        assert scene.region_names[:5] == ["entry", "living", "dining", "kitchen", "laundry"]
        assert tuple(scene.receiver) == HOUSE10_RECEIVER
        assert region_of(scene, scene.receiver) == "entry"

    def test_doors_connect_rooms(self):
        rooms, doors = house10_plan()
        assert len(rooms) == 10
        assert len(doors) == 10

    def test_ray_through_door_passes_wall(self):
        scene = house10()
        below_lintel = intersect(scene, (1.6, 1.0, 2.0), (1.0, 0.0, 0.0))
        above_lintel = intersect(scene, (1.6, 3.0, 2.0), (1.0, 0.0, 0.0))
        assert above_lintel.distance == pytest.approx(1.6)
        assert below_lintel.distance > 1.6 + 1e-6

    def test_wall_without_door_blocks(self):
        scene = house10()
        hit = intersect(scene, (1.6, 1.0, 0.5), (1.0, 0.0, 0.0))
        assert hit.distance == pytest.approx(1.6)

    def test_deterministic(self):
        a, b = house10(), house10()
        np.testing.assert_array_equal(a.vertices, b.vertices)
        np.testing.assert_array_equal(a.triangles, b.triangles)

    def test_presets(self):
        assert set(PRESETS) == {"house10", "shoebox"}
        assert PRESETS["shoebox"]().num_triangles == 12


# ===================================================================
# Floor plan errors
# ===================================================================


class TestFloorPlanErrors:
    def test_two_rooms_with_door(self):
        scene = build_house(_two_rooms(), [Door("a", "b")], WALL, (1.0, 1.0, 1.0))
        assert scene.region_names == ["a", "b"]
        assert scene.num_triangles > 24

    def test_overlapping_rooms(self):
        rooms = [RoomBox("a", (0, 0, 0), (3, 2.5, 4)), RoomBox("b", (2, 0, 0), (6, 2.5, 4))]
        with pytest.raises(FloorPlanError, match="overlap") as exc:
            build_house(rooms, [], WALL, (1.0, 1.0, 1.0))
        assert exc.value.code == ErrorCode.FLOOR_PLAN_ERROR

    def test_door_between_unconnected_rooms(self):
        rooms = [RoomBox("a", (0, 0, 0), (3, 2.5, 4)), RoomBox("b", (5, 0, 0), (6, 2.5, 4))]
        with pytest.raises(FloorPlanError, match="shared wall"):
            build_house(rooms, [Door("a", "b")], WALL, (1.0, 1.0, 1.0))

    def test_door_wider_than_wall(self):
        with pytest.raises(FloorPlanError, match="wide"):
            build_house(_two_rooms(), [Door("a", "b", width=5.0)], WALL, (1.0, 1.0, 1.0))

    def test_door_taller_than_rooms(self):
        with pytest.raises(FloorPlanError, match="taller"):
            build_house(_two_rooms(), [Door("a", "b", height=3.0)], WALL, (1.0, 1.0, 1.0))

    def test_unknown_room_in_door(self):
        with pytest.raises(FloorPlanError, match="unknown room"):
            build_house(_two_rooms(), [Door("a", "z")], WALL, (1.0, 1.0, 1.0))

    def test_receiver_outside_rooms(self):
        with pytest.raises(FloorPlanError, match="receiver"):
            build_house(_two_rooms(), [], WALL, (9.0, 1.0, 1.0))

    def test_mismatched_ceilings(self):
        rooms = [RoomBox("a", (0, 0, 0), (3, 2.5, 4)), RoomBox("b", (3, 0, 0), (6, 3.0, 4))]
        with pytest.raises(FloorPlanError, match="ceiling"):
            build_house(rooms, [], WALL, (1.0, 1.0, 1.0))
