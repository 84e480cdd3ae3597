"""Block-space distances, coverage matrices and light levels."""
from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass

import numpy as np

from .heightmap import WALL, Heightmap

UNREACHABLE = -1

_STEPS = ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1))


@dataclass(frozen=True)
class LightParams:
    l_torch: int = 14
    l_min: int = 8

    def __post_init__(self):
        if self.l_torch < 1 or self.l_min < 1:
            raise ValueError("light levels must be positive")
        if self.l_min > self.l_torch:
            raise ValueError(f"l_min ({self.l_min}) exceeds l_torch ({self.l_torch})")

    @property
    def radius(self) -> int:
        """Largest distance at which a torch still lights a tile to ``l_min``."""
        return self.l_torch - self.l_min


@dataclass(frozen=True)
class DistanceField:
    source: int
    cap: int
    dist: np.ndarray  # per tile index, UNREACHABLE beyond cap

    def __getitem__(self, t: int) -> int:
        return int(self.dist[t])


@dataclass(frozen=True)
class CoverageMatrix:
    d: np.ndarray

    @property
    def n(self) -> int:
        return self.d.shape[0]

    def covered(self, x) -> np.ndarray:
        return self.d @ np.asarray(x, dtype=np.int64)

    def violations(self, x) -> int:
        return int(np.count_nonzero(self.covered(x) < 1))


@dataclass(frozen=True)
class TorchLayout:
    selection: np.ndarray
    light: np.ndarray
    violations: int

    @property
    def torches(self) -> int:
        return int(self.selection.sum())


def block_empty(hmap: Heightmap, i: int, j: int, k: int) -> bool:
    """True iff block (i, j, k) is empty: inside the grid, not a wall, k >= z(i, j)."""
    if not (0 <= i < hmap.height and 0 <= j < hmap.width):
        return False
    z = hmap.elevation[i, j]
    return bool(z != WALL and k >= z)


def _vertical_extent(hmap: Heightmap, cap: int) -> int:
    # Going up and back down costs 2 per level, so no path of length <= cap
    # leaves the slab [0, max_z + cap + 1].
    return int(hmap.elevation.max()) + cap + 2


def distance_field(hmap: Heightmap, source: int, cap: int) -> DistanceField:
    """BFS through empty blocks from the floor block of tile ``source``.

    Distances greater than ``cap`` are reported as ``UNREACHABLE``.
    """
    if cap < 0:
        raise ValueError("cap must be non-negative")
    index = hmap.index
    if not 0 <= source < index.n:
        raise ValueError(f"source {source} is not a tile index (walls have none)")
    z = hmap.elevation
    h, w = z.shape
    top = _vertical_extent(hmap, cap)

    si, sj = index.site(source)
    start = (si, sj, int(z[si, sj]))
    seen = {start: 0}
    queue = deque([start])
    dist = np.full(index.n, UNREACHABLE, dtype=np.int64)
    dist[source] = 0
    while queue:
        p = queue.popleft()
        dp = seen[p]
        if dp == cap:
            continue
        i, j, k = p
        for di, dj, dk in _STEPS:
            ni, nj, nk = i + di, j + dj, k + dk
            if not (0 <= ni < h and 0 <= nj < w and 0 <= nk < top):
                continue
            zn = z[ni, nj]
            if zn == WALL or nk < zn:
                continue
            q = (ni, nj, nk)
            if q in seen:
                continue
            seen[q] = dp + 1
            queue.append(q)
            if nk == zn:
                dist[index.position(ni, nj)] = dp + 1
    return DistanceField(source, cap, dist)


class DistanceCache:
    """Lazily computed, memoized distance fields for one map and one cap."""

    def __init__(self, hmap: Heightmap, cap: int):
        self.hmap = hmap
        self.cap = cap
        self._fields: dict[int, DistanceField] = {}
        self._lock = threading.Lock()

    def __getitem__(self, source: int) -> DistanceField:
        field = self._fields.get(source)
        if field is None:
            field = distance_field(self.hmap, source, self.cap)
            with self._lock:
                self._fields.setdefault(source, field)
        return field


_caches: dict[tuple[Heightmap, int], DistanceCache] = {}
_caches_lock = threading.Lock()


def distance_cache(hmap: Heightmap, cap: int) -> DistanceCache:
    key = (hmap, cap)
    with _caches_lock:
        cache = _caches.get(key)
        if cache is None:
            if len(_caches) > 256:
                _caches.clear()
            cache = _caches[key] = DistanceCache(hmap, cap)
    return cache


def coverage_matrix(hmap: Heightmap, params: LightParams = LightParams()) -> CoverageMatrix:
    cache = distance_cache(hmap, params.radius)
    n = hmap.n
    d = np.zeros((n, n), dtype=np.int64)
    for s in range(n):
        d[s] = cache[s].dist != UNREACHABLE
    d.setflags(write=False)
    return CoverageMatrix(d)


def light_levels(hmap: Heightmap, x, params: LightParams = LightParams()) -> TorchLayout:
    """Per-tile light from the torches selected in ``x``."""
    x = np.asarray(x, dtype=np.int64)
    n = hmap.n
    if x.shape != (n,):
        raise ValueError(f"selection has shape {x.shape}, expected ({n},)")
    cache = distance_cache(hmap, params.l_torch)
    light = np.zeros(n, dtype=np.int64)
    for t in np.flatnonzero(x):
        dist = cache[int(t)].dist
        lit = dist != UNREACHABLE
        light[lit] = np.maximum(light[lit], params.l_torch - dist[lit])
    violations = int(np.count_nonzero(light < params.l_min))
    return TorchLayout(x.copy(), light, violations)
