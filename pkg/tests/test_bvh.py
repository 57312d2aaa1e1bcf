"""
Tests for the bounding volume hierarchy against brute-force intersection.
"""

from __future__ import annotations

import numpy as np
import pytest

from echoloc.scene.bvh import BVH, INTERSECT_EPSILON, moller_trumbore
from echoloc.scene.house import house10
from echoloc.scene.types import intersect, intersect_brute_force


def _random_soup(seed: int, n: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-5, 5, size=(n, 1, 3))
    return centers + rng.uniform(-0.8, 0.8, size=(n, 3, 3))


def _random_rays(seed: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    origins = rng.uniform(-6, 6, size=(n, 3))
    dirs = rng.standard_normal((n, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return origins, dirs


# ===================================================================
# Single triangle
# ===================================================================


class TestMollerTrumbore:
    def test_hit_distance(self):
        v0 = np.array([[0.0, 0.0, 1.0]])
        e1 = np.array([[1.0, 0.0, 0.0]])
        e2 = np.array([[0.0, 1.0, 0.0]])
        t = moller_trumbore(np.array([[0.2, 0.2, 0.0]]), np.array([[0.0, 0.0, 1.0]]), v0, e1, e2)
        assert t[0] == pytest.approx(1.0)

    def test_miss_outside_triangle(self):
        v0 = np.array([[0.0, 0.0, 1.0]])
        e1 = np.array([[1.0, 0.0, 0.0]])
        e2 = np.array([[0.0, 1.0, 0.0]])
        t = moller_trumbore(np.array([[0.8, 0.8, 0.0]]), np.array([[0.0, 0.0, 1.0]]), v0, e1, e2)
        assert np.isinf(t[0])

    def test_hit_behind_origin_is_a_miss(self):
        v0 = np.array([[0.0, 0.0, -1.0]])
        e1 = np.array([[1.0, 0.0, 0.0]])
        e2 = np.array([[0.0, 1.0, 0.0]])
        t = moller_trumbore(np.array([[0.2, 0.2, 0.0]]), np.array([[0.0, 0.0, 1.0]]), v0, e1, e2)
        assert np.isinf(t[0])

    def test_epsilon_distance_is_a_miss(self):
        v0 = np.array([[0.0, 0.0, INTERSECT_EPSILON / 2]])
        e1 = np.array([[1.0, 0.0, 0.0]])
        e2 = np.array([[0.0, 1.0, 0.0]])
        t = moller_trumbore(np.array([[0.2, 0.2, 0.0]]), np.array([[0.0, 0.0, 1.0]]), v0, e1, e2)
        assert np.isinf(t[0])


# ===================================================================
# BVH against brute force
# ===================================================================


class TestAgreesWithBruteForce:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_random_soup(self, seed: int):
        bvh = BVH(_random_soup(seed, 200))
        origins, dirs = _random_rays(seed + 100, 2000)
        t_fast, tri_fast = bvh.closest_hits(origins, dirs)
        t_slow, tri_slow = bvh.closest_hits_brute_force(origins, dirs)
        np.testing.assert_array_equal(tri_fast, tri_slow)
        np.testing.assert_array_equal(t_fast, t_slow)
        assert np.any(tri_fast >= 0)
        assert np.any(tri_fast < 0)

    def test_house_mesh(self):
        scene = house10()
        rng = np.random.default_rng(7)
        lo, hi = scene.bounds[0].as_array(), scene.bounds[1].as_array()
        for _ in range(200):
            o = rng.uniform(lo, hi)
            d = rng.standard_normal(3)
            d /= np.linalg.norm(d)
            fast = intersect(scene, o, d)
            slow = intersect_brute_force(scene, o, d)
            assert (fast is None) == (slow is None)
            if fast is not None:
                assert fast.triangle == slow.triangle
                assert fast.distance == slow.distance

    def test_t_max_limits_hits(self):
        bvh = BVH(_random_soup(3, 100))
        origins, dirs = _random_rays(4, 500)
        t_max = np.full(len(origins), 1.5)
        t_fast, tri_fast = bvh.closest_hits(origins, dirs, t_max=t_max)
        _, tri_slow = bvh.closest_hits_brute_force(origins, dirs, t_max=t_max)
        np.testing.assert_array_equal(tri_fast, tri_slow)
        assert np.all(t_fast[tri_fast >= 0] <= 1.5)


# ===================================================================
# Ties and edge cases
# ===================================================================


class TestTiesAndEdges:
    def test_duplicate_triangles_resolve_to_lowest_index(self):
        tri = np.array([[[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]]])
        far = tri + np.array([0.0, 0.0, 3.0])
        corners = np.concatenate([far, tri, tri, tri])
        bvh = BVH(corners)
        t, idx = bvh.closest_hits(np.array([[0.2, 0.2, 0.0]]), np.array([[0.0, 0.0, 1.0]]))
        assert idx[0] == 1
        assert t[0] == pytest.approx(1.0)

    def test_empty_bvh(self):
        bvh = BVH(np.zeros((0, 3, 3)))
        assert bvh.num_nodes == 0
        t, tri = bvh.closest_hits(np.zeros((4, 3)), np.tile([1.0, 0.0, 0.0], (4, 1)))
        assert np.all(np.isinf(t))
        assert np.all(tri == -1)
        assert not bvh.occluded(np.zeros((2, 3)), np.ones((2, 3))).any()

    def test_occluded_segments(self):
        wall = np.array([
            [[1.0, -1.0, -1.0], [1.0, 1.0, -1.0], [1.0, -1.0, 1.0]],
            [[1.0, 1.0, -1.0], [1.0, 1.0, 1.0], [1.0, -1.0, 1.0]],
        ])
        bvh = BVH(wall)
        starts = np.array([[0.0, 0.3, 0.2]] * 3)
        ends = np.array([[2.0, 0.3, 0.2], [0.5, 0.3, 0.2], [1.0, 0.3, 0.2]])
        assert bvh.occluded(starts, ends).tolist() == [True, False, False]
