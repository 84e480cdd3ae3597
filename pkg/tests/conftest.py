from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from torchplace.heightmap import WALL, Heightmap, load_heightmap

FIXTURES = Path(__file__).parent / "fixtures"


def random_map(rng, height, width, levels=3, wall_p=0.3, max_n=None) -> Heightmap:
    """Random heightmap with at least one floor tile (and at most ``max_n``)."""
    while True:
        z = rng.integers(0, levels, size=(height, width))
        z[rng.random((height, width)) < wall_p] = WALL
        n = int((z != WALL).sum())
        if n >= 1 and (max_n is None or n <= max_n):
            return Heightmap(z)


def small_maps(count, seed, max_n=14):
    """Small random maps with walls and 2 or 3 elevation levels."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        h, w = rng.integers(2, 6, size=2)
        out.append(random_map(rng, int(h), int(w), int(rng.integers(2, 4)), 0.3, max_n))
    return out


def flat(height, width) -> Heightmap:
    return Heightmap(np.zeros((height, width), dtype=np.int64))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def fixture_map():
    def load(name):
        return load_heightmap(FIXTURES / name)
    return load


ACCEPTANCE: list[str] = []


def record(criterion: int, ok: bool, detail: str) -> None:
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
