"""Heightmap instances: parsing, serialization and Perlin-noise generation."""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from functools import cached_property

import numpy as np

WALL = -1
WALL_TOKEN = "#"


class HeightmapError(ValueError):
    """Malformed heightmap text or invalid heightmap contents."""


@dataclass(frozen=True, eq=False)
class Heightmap:
    """Rectangular grid of floor elevations; ``WALL`` (-1) marks z = infinity."""

    elevation: np.ndarray

    def __post_init__(self):
        z = np.array(self.elevation, dtype=np.int64, copy=True)
        if z.ndim != 2 or z.shape[0] < 1 or z.shape[1] < 1:
            raise HeightmapError(f"elevation must be a non-empty 2D grid, got shape {z.shape}")
        if np.any(z < WALL):
            raise HeightmapError("elevations must be non-negative integers or WALL")
        if not np.any(z != WALL):
            raise HeightmapError("heightmap has no non-wall tiles")
        z.setflags(write=False)
        object.__setattr__(self, "elevation", z)

    @property
    def height(self) -> int:
        return self.elevation.shape[0]

    @property
    def width(self) -> int:
        return self.elevation.shape[1]

    @property
    def walls(self) -> np.ndarray:
        return self.elevation == WALL

    def is_wall(self, i: int, j: int) -> bool:
        return bool(self.elevation[i, j] == WALL)

    @cached_property
    def index(self) -> TileIndex:
        return tile_index(self)

    @property
    def n(self) -> int:
        return self.index.n

    def __eq__(self, other):
        if not isinstance(other, Heightmap):
            return NotImplemented
        return np.array_equal(self.elevation, other.elevation)

    def __hash__(self):
        return hash((self.elevation.shape, self.elevation.tobytes()))

    def __repr__(self):
        return f"Heightmap({self.width}x{self.height}, n={self.n})"


@dataclass(frozen=True)
class TileIndex:
    """Row-major enumeration of the non-wall tiles."""

    ordering: tuple[tuple[int, int], ...]

    @property
    def n(self) -> int:
        return len(self.ordering)

    @cached_property
    def _lookup(self) -> dict[tuple[int, int], int]:
        return {site: k for k, site in enumerate(self.ordering)}

    def site(self, k: int) -> tuple[int, int]:
        return self.ordering[k]

    def position(self, i: int, j: int) -> int:
        """Tile index of site (i, j); raises KeyError for walls."""
        return self._lookup[(i, j)]

    def __contains__(self, site) -> bool:
        return tuple(site) in self._lookup

    def __len__(self):
        return self.n


def tile_index(hmap: Heightmap) -> TileIndex:
    rows, cols = np.nonzero(~hmap.walls)
    return TileIndex(tuple((int(i), int(j)) for i, j in zip(rows, cols)))


def parse_heightmap(text: str) -> Heightmap:
    """Parse whitespace-separated rows; integers are elevations, ``#`` is a wall.

    Blank lines are ignored.
    """
    if not text or not text.strip():
        raise HeightmapError("empty heightmap text")
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        if width is None:
            width = len(tokens)
        elif len(tokens) != width:
            raise HeightmapError(
                f"line {lineno}: expected {width} tokens, found {len(tokens)}"
            )
        row = []
        for tok in tokens:
            if tok == WALL_TOKEN:
                row.append(WALL)
            elif tok.isdigit():
                row.append(int(tok))
            else:
                raise HeightmapError(f"line {lineno}: invalid token {tok!r}")
        rows.append(row)
    return Heightmap(np.array(rows, dtype=np.int64))


def serialize_heightmap(hmap: Heightmap) -> str:
    lines = []
    for row in hmap.elevation:
        lines.append(" ".join(WALL_TOKEN if v == WALL else str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def load_heightmap(path) -> Heightmap:
    with open(path, encoding="utf-8") as fh:
        return parse_heightmap(fh.read())


def save_heightmap(hmap: Heightmap, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_heightmap(hmap))


# --- Perlin noise -----------------------------------------------------------

def _fade(t):
    return t * t * t * (t * (t * 6 - 15) + 10)


def perlin_noise(width: int, height: int, seed: int, frequency: float = 0.15,
                 octaves: int = 1, persistence: float = 0.5) -> np.ndarray:
    """Classic 2D lattice-gradient noise sampled at tile centres.

    Returns a (height, width) array. Values lie roughly in [-1, 1].
    """
    rng = np.random.default_rng(seed)
    perm = rng.permutation(256)
    perm = np.concatenate([perm, perm])
    angles = rng.uniform(0.0, 2.0 * np.pi, 256)
    gradients = np.stack([np.cos(angles), np.sin(angles)], axis=1)

    ys, xs = np.mgrid[0:height, 0:width].astype(float)
    total = np.zeros((height, width))
    amplitude, freq, norm = 1.0, frequency, 0.0
    for octave in range(octaves):
        # offset each octave so lattice points never coincide with sample points
        px = (xs + 0.5) * freq + 17.31 * octave
        py = (ys + 0.5) * freq + 5.77 * octave
        x0 = np.floor(px).astype(int)
        y0 = np.floor(py).astype(int)
        fx = px - x0
        fy = py - y0

        def corner(dx, dy):
            h = perm[perm[(x0 + dx) & 255] + ((y0 + dy) & 255)]
            g = gradients[h]
            return g[..., 0] * (fx - dx) + g[..., 1] * (fy - dy)

        u, v = _fade(fx), _fade(fy)
        bottom = corner(0, 0) + u * (corner(1, 0) - corner(0, 0))
        top = corner(0, 1) + u * (corner(1, 1) - corner(0, 1))
        total += amplitude * (bottom + v * (top - bottom))
        norm += amplitude
        amplitude *= persistence
        freq *= 2.0
    return total / norm * np.sqrt(2.0)


def generate_perlin_map(width: int, height: int, seed: int, wall_threshold: float = 0.58,
                        elevation_levels: int = 3, frequency: float = 0.15,
                        octaves: int = 1, connected: bool = True) -> Heightmap:
    """Generate a cave-like heightmap from Perlin noise.

    Tiles whose noise lies above the ``wall_threshold`` quantile become walls,
    so about a ``1 - wall_threshold`` fraction of the map is wall. The
    remaining tiles are split into ``elevation_levels`` equal-width noise bands
    (lowest noise = elevation 0).

    With ``connected`` the map is a single cave of the same size, grown
    through the noise valleys from the lowest point.
    """
    if width < 2 or height < 2:
        raise HeightmapError(f"width and height must be >= 2, got {width}x{height}")
    if not 0.0 < wall_threshold <= 1.0:
        raise HeightmapError(f"wall_threshold must lie in (0, 1], got {wall_threshold}")
    if elevation_levels < 1:
        raise HeightmapError(f"elevation_levels must be >= 1, got {elevation_levels}")

    attempt = 0
    while True:
        noise = perlin_noise(width, height, seed + attempt * 7919, frequency, octaves)
        cut = np.quantile(noise, wall_threshold)
        walls = noise > cut
        if not walls.all():
            break
        attempt += 1
    if connected:
        walls = _flood_cave(noise, int((~walls).sum()))

    floor = noise[~walls]
    lo, hi = floor.min(), floor.max()
    if hi > lo:
        bands = np.floor((noise - lo) / (hi - lo) * elevation_levels).astype(np.int64)
        bands = np.clip(bands, 0, elevation_levels - 1)
    else:
        bands = np.zeros_like(noise, dtype=np.int64)
    bands[walls] = WALL
    return Heightmap(bands)


def _flood_cave(noise: np.ndarray, size: int) -> np.ndarray:
    """Walls mask whose floor is one 4-connected region of exactly ``size`` tiles.

    Grows from the lowest-noise tile, always taking the lowest frontier tile,
    so the cave follows the noise valleys.
    """
    h, w = noise.shape
    start = np.unravel_index(int(np.argmin(noise)), noise.shape)
    floor = np.zeros(noise.shape, dtype=bool)
    queued = np.zeros(noise.shape, dtype=bool)
    queued[start] = True
    heap = [(float(noise[start]), start)]
    taken = 0
    while heap and taken < size:
        _, (i, j) = heapq.heappop(heap)
        floor[i, j] = True
        taken += 1
        for a, b in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
            if 0 <= a < h and 0 <= b < w and not queued[a, b]:
                queued[a, b] = True
                heapq.heappush(heap, (float(noise[a, b]), (a, b)))
    return ~floor
