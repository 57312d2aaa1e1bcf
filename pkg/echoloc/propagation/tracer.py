"""
Monte Carlo bidirectional path tracing of broadband energy.

Subpaths are grown from the source and from the receiver. Every vertex pair
(one vertex per side, same subpath index) that can see each other forms a
full path whose contribution is binned into the impulse response.

Estimator
---------
For subpath index ``n`` with source vertex ``a`` and receiver vertex ``b``::

    L     = len_s[a] + |x_s[a] - x_r[b]| + len_r[b]
    delay = L / c
    amp   = sqrt(E_s[a] * E_r[b]) / (4 * pi * L) / (a + b + 1)

``a + b`` is the number of surface reflections on the path and ``a + b + 1``
the number of (a, b) splits that build a path of that order, so each order
is weighted uniformly across its connection strategies. The RIR is the sum
over ``n`` divided by ``rays_per_endpoint``.

Random numbers come from counter-based streams keyed by
``(seed, side, block)`` where a block is a fixed range of ray indices, so the
result does not depend on the number of worker threads. Russian roulette
terminates paths without reweighting the survivors, which keeps vertex
energies non-increasing at the cost of a small downward bias in late energy.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

from echoloc.config import PropagationConfig
from echoloc.errors import ErrorCode, PropagationError
from echoloc.propagation.types import Contributions, ImpulseResponse, SubpathBatch
from echoloc.scene.types import Point3, Scene
from echoloc.seeding import rng_for

logger = logging.getLogger(__name__)

ENERGY_CUTOFF = 1e-6
MIN_SOURCE_DISTANCE = 1e-3
_RR_MIN_SURVIVAL = 0.1

T = TypeVar("T")


def _map_blocks(fn: Callable[[int], T], num_blocks: int, threads: int) -> list[T]:
    """Apply ``fn`` to every block index; results are in block order."""
    if threads <= 1 or num_blocks <= 1:
        return [fn(b) for b in range(num_blocks)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(num_blocks)))


def _uniform_sphere(rng: np.random.Generator, n: int) -> np.ndarray:
    u, v = rng.random(n), rng.random(n)
    z = 1.0 - 2.0 * u
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = 2.0 * np.pi * v
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def _cosine_hemisphere(normals: np.ndarray, u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
    """Cosine-weighted directions about each unit normal."""
    r = np.sqrt(u1)
    phi = 2.0 * np.pi * u2
    lx, ly, lz = r * np.cos(phi), r * np.sin(phi), np.sqrt(np.maximum(0.0, 1.0 - u1))
    # Orthonormal basis (t, b, n) per normal.
    helper = np.where(np.abs(normals[:, :1]) > 0.9, [[0.0, 1.0, 0.0]], [[1.0, 0.0, 0.0]])
    t = np.cross(helper, normals)
    t /= np.linalg.norm(t, axis=1, keepdims=True)
    b = np.cross(normals, t)
    d = lx[:, None] * t + ly[:, None] * b + lz[:, None] * normals
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _trace_block(
    scene: Scene,
    origin: np.ndarray,
    n: int,
    config: PropagationConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    k_max = config.max_bounces + 1
    positions = np.zeros((n, k_max, 3))
    energy = np.zeros((n, k_max))
    length = np.zeros((n, k_max))
    count = np.ones(n, dtype=np.int64)
    positions[:, 0] = origin
    energy[:, 0] = 1.0

    pos = np.repeat(origin[None, :], n, axis=0)
    dirs = _uniform_sphere(rng, n)
    e = np.ones(n)
    travelled = np.zeros(n)
    alive = np.arange(n)
    bvh = scene.bvh

    for k in range(1, k_max):
        if len(alive) == 0:
            break
        t, tri = bvh.closest_hits(pos[alive], dirs[alive])
        hit = tri >= 0
        alive, t, tri = alive[hit], t[hit], tri[hit]
        if len(alive) == 0:
            break
        d = dirs[alive]
        p = pos[alive] + t[:, None] * d
        normal = bvh.normals[tri]
        normal = np.where((np.einsum("ij,ij->i", normal, d) > 0)[:, None], -normal, normal)
        e_new = e[alive] * (1.0 - scene.triangle_absorption[tri])
        l_new = travelled[alive] + t

        positions[alive, k] = p
        energy[alive, k] = e_new
        length[alive, k] = l_new
        count[alive] = k + 1

        u_rr = rng.random(len(alive))
        u_sc = rng.random(len(alive))
        u_dir = rng.random((len(alive), 2))

        keep = e_new >= ENERGY_CUTOFF
        if k >= config.russian_roulette_start:
            keep &= u_rr < np.clip(e_new, _RR_MIN_SURVIVAL, 1.0)

        diffuse = u_sc < scene.triangle_scattering[tri]
        specular = d - 2.0 * np.einsum("ij,ij->i", d, normal)[:, None] * normal
        scattered = _cosine_hemisphere(normal, u_dir[:, 0], u_dir[:, 1])
        new_dirs = np.where(diffuse[:, None], scattered, specular)
        new_dirs /= np.linalg.norm(new_dirs, axis=1, keepdims=True)

        pos[alive] = p
        dirs[alive] = new_dirs
        e[alive] = e_new
        travelled[alive] = l_new
        alive = alive[keep]

    width = int(count.max())
    return positions[:, :width], energy[:, :width], length[:, :width], count


def trace_subpaths(
    scene: Scene,
    origin: Point3 | Sequence[float],
    config: PropagationConfig,
    stream: str = "source",
    *,
    threads: int = 1,
) -> SubpathBatch:
    """
    Grow ``config.rays_per_endpoint`` subpaths from ``origin``.

    Vertex 0 of every subpath is the origin with energy 1 and length 0. Each
    further vertex is a surface hit; its energy is the previous energy times
    ``1 - absorption``. The continuation is diffuse (cosine hemisphere) with
    probability equal to the material's scattering fraction, specular
    otherwise. A subpath ends when its ray escapes, after ``max_bounces``
    hits, when energy drops below 1e-6, or by Russian roulette from bounce
    ``russian_roulette_start`` on.

    ``stream`` labels the random stream, so the two endpoints of one
    simulation draw independent numbers.

    Raises
    ------
    PropagationError
        If ``origin`` lies outside the scene bounding box.
    """
    o = Point3.of(origin)
    if not scene.contains(o):
        raise PropagationError(f"origin {tuple(o)} lies outside the scene", ErrorCode.SOURCE_OUTSIDE)
    origin_arr = o.as_array()
    n_total = config.rays_per_endpoint
    bs = config.block_size
    num_blocks = -(-n_total // bs)

    def run(block: int):
        n = min(bs, n_total - block * bs)
        return _trace_block(scene, origin_arr, n, config, rng_for(config.seed, stream, block))

    parts = _map_blocks(run, num_blocks, threads)
    width = max(p[0].shape[1] for p in parts)

    def pad(a: np.ndarray) -> np.ndarray:
        extra = width - a.shape[1]
        if extra == 0:
            return a
        return np.pad(a, [(0, 0), (0, extra)] + [(0, 0)] * (a.ndim - 2))

    return SubpathBatch(
        positions=np.concatenate([pad(p[0]) for p in parts]),
        energy=np.concatenate([pad(p[1]) for p in parts]),
        length=np.concatenate([pad(p[2]) for p in parts]),
        count=np.concatenate([p[3] for p in parts]),
    )


def _connect_range(
    scene: Scene,
    src: SubpathBatch,
    rec: SubpathBatch,
    lo: int,
    hi: int,
    speed_of_sound: float,
) -> Contributions:
    ks, kr = src.max_vertices, rec.max_vertices
    a_idx = np.arange(ks)
    b_idx = np.arange(kr)
    valid_s = (a_idx[None, :] < src.count[lo:hi, None]) & (src.energy[lo:hi] > 0)
    valid_r = (b_idx[None, :] < rec.count[lo:hi, None]) & (rec.energy[lo:hi] > 0)
    n_rel, a, b = np.nonzero(valid_s[:, :, None] & valid_r[:, None, :])
    n = n_rel + lo

    xs = src.positions[n, a]
    xr = rec.positions[n, b]
    gap = np.linalg.norm(xr - xs, axis=1)
    visible = ~scene.bvh.occluded(xs, xr)
    n, a, b, gap = n[visible], a[visible], b[visible], gap[visible]

    total = src.length[n, a] + gap + rec.length[n, b]
    amp = np.sqrt(src.energy[n, a] * rec.energy[n, b]) / (4.0 * np.pi * total) / (a + b + 1)
    return Contributions(
        delay=total / speed_of_sound,
        amplitude=amp,
        bounces=(a + b).astype(np.int64),
        subpath=n.astype(np.int64),
    )


def connect(
    scene: Scene,
    source_subpaths: SubpathBatch,
    receiver_subpaths: SubpathBatch,
    config: PropagationConfig,
) -> Contributions:
    """
    Connect every mutually visible vertex pair of matching subpaths.

    Pairs with a zero-energy vertex contribute nothing and are skipped.
    Contributions are ordered by subpath index, then source vertex, then
    receiver vertex.
    """
    n = min(len(source_subpaths), len(receiver_subpaths))
    parts = [
        _connect_range(scene, source_subpaths, receiver_subpaths, lo, min(lo + config.block_size, n),
                       config.speed_of_sound)
        for lo in range(0, n, config.block_size)
    ]
    if not parts:
        empty = np.zeros(0)
        return Contributions(empty, empty, empty.astype(np.int64), empty.astype(np.int64))
    return Contributions(
        delay=np.concatenate([p.delay for p in parts]),
        amplitude=np.concatenate([p.amplitude for p in parts]),
        bounces=np.concatenate([p.bounces for p in parts]),
        subpath=np.concatenate([p.subpath for p in parts]),
    )


def bin_contributions(delay: np.ndarray, amplitude: np.ndarray, sample_rate: int, num_samples: int) -> np.ndarray:
    """Nearest-sample accumulation; contributions past the end are dropped."""
    idx = np.floor(delay * sample_rate + 0.5).astype(np.int64)
    keep = idx < num_samples
    return np.bincount(idx[keep], weights=amplitude[keep], minlength=num_samples)[:num_samples]


def simulate_rir(
    scene: Scene,
    source: Point3 | Sequence[float],
    config: PropagationConfig,
    *,
    threads: int = 1,
) -> ImpulseResponse:
    """
    Room impulse response from ``source`` to the scene's receiver.

    Output is bit-identical for a fixed ``config`` (seed included) whatever
    the value of ``threads``: per-block partial responses are summed in
    block order.

    Raises
    ------
    PropagationError
        ``source_outside`` if the source is outside the bounding box,
        ``source_at_receiver`` if it is closer than 1 mm to the receiver.
    """
    src_point = Point3.of(source)
    if not scene.contains(src_point):
        raise PropagationError(f"source {tuple(src_point)} lies outside the scene", ErrorCode.SOURCE_OUTSIDE)
    if src_point.distance_to(scene.receiver) < MIN_SOURCE_DISTANCE:
        raise PropagationError("source coincides with the receiver", ErrorCode.SOURCE_AT_RECEIVER)

    logger.debug(
        "Tracing %d rays per endpoint (max %d bounces) from %s",
        config.rays_per_endpoint, config.max_bounces, tuple(src_point),
    )
    src = trace_subpaths(scene, src_point, config, "source", threads=threads)
    rec = trace_subpaths(scene, scene.receiver, config, "receiver", threads=threads)

    n = config.rays_per_endpoint
    bs = config.block_size
    num_samples = config.num_samples

    def run(block: int) -> np.ndarray:
        lo = block * bs
        c = _connect_range(scene, src, rec, lo, min(lo + bs, n), config.speed_of_sound)
        return bin_contributions(c.delay, c.amplitude, config.sample_rate, num_samples)

    partials = _map_blocks(run, -(-n // bs), threads)
    samples = np.zeros(num_samples)
    for part in partials:
        samples += part
    samples /= n
    return ImpulseResponse(
        samples=samples,
        sample_rate=config.sample_rate,
        metadata={"source": list(src_point), "receiver": list(scene.receiver), "method": "path-tracing"},
    )
