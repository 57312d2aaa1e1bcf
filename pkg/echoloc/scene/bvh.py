"""
Bounding-volume hierarchy over scene triangles with batched ray queries.

The tree is built once per scene (median split on the widest centroid axis)
and flattened into arrays. Traversal is vectorized over rays: each node is
visited with the subset of rays whose slab test passes and whose current
best hit is not already closer than the node's entry distance.

Triangle tests use the same element-wise Möller–Trumbore kernel as the
brute-force path, and ties between equal distances resolve to the lowest
triangle index in both, so BVH and brute-force results are identical.
"""

from __future__ import annotations

import numpy as np

INTERSECT_EPSILON = 1e-4
LEAF_SIZE = 4
_BOX_PAD = 1e-7
_DET_EPSILON = 1e-12
_BRUTE_CHUNK = 4096


def _cross(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return (
        a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
        a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
        a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0],
    )


def moller_trumbore(
    origins: np.ndarray,
    dirs: np.ndarray,
    v0: np.ndarray,
    e1: np.ndarray,
    e2: np.ndarray,
) -> np.ndarray:
    """Hit distance for broadcast ray/triangle pairs, ``inf`` on a miss.

    All inputs broadcast against each other with a trailing axis of 3.
    Hits at distance <= :data:`INTERSECT_EPSILON` count as misses.
    """
    px, py, pz = _cross(dirs, e2)
    det = e1[..., 0] * px + e1[..., 1] * py + e1[..., 2] * pz
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / det
        s = origins - v0
        u = (s[..., 0] * px + s[..., 1] * py + s[..., 2] * pz) * inv
        qx, qy, qz = _cross(s, e1)
        v = (dirs[..., 0] * qx + dirs[..., 1] * qy + dirs[..., 2] * qz) * inv
        t = (e2[..., 0] * qx + e2[..., 1] * qy + e2[..., 2] * qz) * inv
    ok = (
        (np.abs(det) > _DET_EPSILON)
        & (u >= 0.0) & (u <= 1.0)
        & (v >= 0.0) & (u + v <= 1.0)
        & (t > INTERSECT_EPSILON)
    )
    return np.where(ok, t, np.inf)


class BVH:
    """
    Flattened BVH over a ``(T, 3, 3)`` array of triangle corners.

    Parameters
    ----------
    corners:
        Triangle vertex positions, ``corners[i] = (a, b, c)``.
    """

    def __init__(self, corners: np.ndarray) -> None:
        corners = np.asarray(corners, dtype=np.float64).reshape(-1, 3, 3)
        self.v0 = corners[:, 0]
        self.e1 = corners[:, 1] - corners[:, 0]
        self.e2 = corners[:, 2] - corners[:, 0]
        nx, ny, nz = _cross(self.e1, self.e2)
        n = np.stack([nx, ny, nz], axis=-1)
        norms = np.linalg.norm(n, axis=-1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            self.normals = np.where(norms > 0, n / norms, 0.0)

        self.num_triangles = len(corners)
        node_min: list[np.ndarray] = []
        node_max: list[np.ndarray] = []
        left: list[int] = []
        right: list[int] = []
        leaf_tris: list[np.ndarray | None] = []

        if self.num_triangles:
            tri_min = corners.min(axis=1)
            tri_max = corners.max(axis=1)
            centroids = corners.mean(axis=1)

            def build(indices: np.ndarray) -> int:
                node = len(node_min)
                node_min.append(tri_min[indices].min(axis=0) - _BOX_PAD)
                node_max.append(tri_max[indices].max(axis=0) + _BOX_PAD)
                left.append(-1)
                right.append(-1)
                leaf_tris.append(None)
                c = centroids[indices]
                spread = c.max(axis=0) - c.min(axis=0)
                if len(indices) <= LEAF_SIZE or not np.any(spread > 0):
                    leaf_tris[node] = np.sort(indices)
                    return node
                axis = int(np.argmax(spread))
                order = indices[np.argsort(c[:, axis], kind="stable")]
                half = len(order) // 2
                left[node] = build(order[:half])
                right[node] = build(order[half:])
                return node

            build(np.arange(self.num_triangles))

        self.node_min = np.array(node_min).reshape(-1, 3)
        self.node_max = np.array(node_max).reshape(-1, 3)
        self.left = np.array(left, dtype=np.int64)
        self.right = np.array(right, dtype=np.int64)
        self.leaf_tris = leaf_tris

    @property
    def num_nodes(self) -> int:
        return len(self.node_min)

    # ------------------------------------------------------------------
    # Queries
    # ------------------------------------------------------------------

    def closest_hits(
        self,
        origins: np.ndarray,
        dirs: np.ndarray,
        t_max: np.ndarray | None = None,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Nearest hit per ray.

        Returns ``(t, tri)`` with ``t = inf`` and ``tri = -1`` for rays that
        miss everything (or only hit beyond ``t_max``).
        """
        origins = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
        dirs = np.asarray(dirs, dtype=np.float64).reshape(-1, 3)
        n = len(origins)
        best_t = np.full(n, np.inf)
        best_tri = np.full(n, -1, dtype=np.int64)
        if self.num_triangles == 0 or n == 0:
            return best_t, best_tri
        limit = np.full(n, np.inf) if t_max is None else np.asarray(t_max, dtype=np.float64)

        with np.errstate(divide="ignore"):
            inv_dirs = 1.0 / dirs

        stack: list[tuple[int, np.ndarray]] = [(0, np.arange(n))]
        while stack:
            node, rays = stack.pop()
            o = origins[rays]
            inv = inv_dirs[rays]
            with np.errstate(invalid="ignore"):
                t1 = (self.node_min[node] - o) * inv
                t2 = (self.node_max[node] - o) * inv
            lo = np.where(np.isnan(t1) | np.isnan(t2), -np.inf, np.minimum(t1, t2))
            hi = np.where(np.isnan(t1) | np.isnan(t2), np.inf, np.maximum(t1, t2))
            t_near = lo.max(axis=1)
            t_far = hi.min(axis=1)
            bound = np.minimum(best_t[rays], limit[rays])
            keep = (t_near <= t_far) & (t_far >= 0.0) & (t_near <= bound)
            rays = rays[keep]
            if len(rays) == 0:
                continue
            tris = self.leaf_tris[node]
            if tris is None:
                stack.append((int(self.right[node]), rays))
                stack.append((int(self.left[node]), rays))
                continue
            o = origins[rays][:, None, :]
            d = dirs[rays][:, None, :]
            t = moller_trumbore(o, d, self.v0[tris][None], self.e1[tris][None], self.e2[tris][None])
            t = np.where(t <= limit[rays][:, None], t, np.inf)
            # tris are sorted, so argmin gives the lowest index among equal distances
            k = np.argmin(t, axis=1)
            cand_t = t[np.arange(len(rays)), k]
            cand_tri = tris[k]
            better = (cand_t < best_t[rays]) | ((cand_t == best_t[rays]) & (cand_tri < best_tri[rays]))
            better &= np.isfinite(cand_t)
            best_t[rays[better]] = cand_t[better]
            best_tri[rays[better]] = cand_tri[better]
        return best_t, best_tri

    def closest_hits_brute_force(
        self,
        origins: np.ndarray,
        dirs: np.ndarray,
        t_max: np.ndarray | None = None,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Same contract as :meth:`closest_hits`, testing every triangle."""
        origins = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
        dirs = np.asarray(dirs, dtype=np.float64).reshape(-1, 3)
        n = len(origins)
        best_t = np.full(n, np.inf)
        best_tri = np.full(n, -1, dtype=np.int64)
        if self.num_triangles == 0:
            return best_t, best_tri
        limit = np.full(n, np.inf) if t_max is None else np.asarray(t_max, dtype=np.float64)
        for start in range(0, n, _BRUTE_CHUNK):
            sl = slice(start, start + _BRUTE_CHUNK)
            t = moller_trumbore(
                origins[sl][:, None, :], dirs[sl][:, None, :],
                self.v0[None], self.e1[None], self.e2[None],
            )
            t = np.where(t <= limit[sl][:, None], t, np.inf)
            k = np.argmin(t, axis=1)
            tk = t[np.arange(len(k)), k]
            hit = np.isfinite(tk)
            best_t[sl] = np.where(hit, tk, np.inf)
            best_tri[sl] = np.where(hit, k, -1)
        return best_t, best_tri

    def occluded(self, starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
        """True where a triangle blocks the open segment ``start -> end``.

        Hits within :data:`INTERSECT_EPSILON` of either endpoint are ignored
        so that points lying on surfaces can see each other.
        """
        starts = np.asarray(starts, dtype=np.float64).reshape(-1, 3)
        ends = np.asarray(ends, dtype=np.float64).reshape(-1, 3)
        seg = ends - starts
        dist = np.linalg.norm(seg, axis=1)
        if self.num_triangles == 0:
            return np.zeros(len(starts), dtype=bool)
        safe = np.where(dist > 0, dist, 1.0)
        dirs = seg / safe[:, None]
        _, tri = self.closest_hits(starts, dirs, t_max=dist - INTERSECT_EPSILON)
        return (tri >= 0) & (dist > 2 * INTERSECT_EPSILON)
