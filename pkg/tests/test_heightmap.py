from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torchplace.heightmap import (WALL, Heightmap, HeightmapError, generate_perlin_map,
                                  load_heightmap, parse_heightmap, save_heightmap,
                                  serialize_heightmap, tile_index)

from conftest import random_map


@st.composite
def heightmaps(draw, max_side=6):
    h = draw(st.integers(1, max_side))
    w = draw(st.integers(1, max_side))
    cells = draw(st.lists(st.integers(-1, 9), min_size=h * w, max_size=h * w))
    z = np.array(cells).reshape(h, w)
    if (z == WALL).all():
        z[0, 0] = 0
    return Heightmap(z)


def test_parse_uniform_floor():
    m = parse_heightmap("0 0\n0 0")
    assert (m.height, m.width) == (2, 2)
    assert np.all(m.elevation == 0)


def test_parse_wall():
    m = parse_heightmap("0 1 #\n0 0 0")
    assert (m.height, m.width) == (2, 3)
    assert m.is_wall(0, 2)
    assert m.walls.sum() == 1
    assert m.elevation[0, 1] == 1


def test_parse_skips_blank_lines():
    assert parse_heightmap("\n0 1\n\n2 #\n\n") == parse_heightmap("0 1\n2 #")


def test_ragged_rows_report_line():
    with pytest.raises(HeightmapError, match="line 2"):
        parse_heightmap("0 0\n0\n")


@pytest.mark.parametrize("text", ["0 x", "0 -1", "0 1.5"])
def test_bad_token(text):
    with pytest.raises(HeightmapError, match="invalid token"):
        parse_heightmap(text)


@pytest.mark.parametrize("text", ["", "   \n", "# #\n# #"])
def test_empty_instance(text):
    with pytest.raises(HeightmapError):
        parse_heightmap(text)


def test_serialize_small():
    assert serialize_heightmap(Heightmap(np.array([[0]]))).strip() == "0"
    assert serialize_heightmap(Heightmap(np.array([[0, WALL]]))).strip() == "0 #"


@given(heightmaps())
def test_roundtrip(hmap):
    text = serialize_heightmap(hmap)
    assert parse_heightmap(text) == hmap
    assert serialize_heightmap(parse_heightmap(text)).split() == text.split()


def test_roundtrip_random_maps(rng):
    for _ in range(100):
        m = random_map(rng, int(rng.integers(1, 9)), int(rng.integers(1, 9)), 5, 0.3)
        assert parse_heightmap(serialize_heightmap(m)) == m


def test_file_roundtrip(tmp_path):
    m = parse_heightmap("0 1 #\n2 0 0")
    save_heightmap(m, tmp_path / "m.txt")
    assert load_heightmap(tmp_path / "m.txt") == m


def test_heightmap_is_immutable():
    m = parse_heightmap("0 0")
    with pytest.raises(ValueError):
        m.elevation[0, 0] = 3


def test_tile_index_examples():
    assert tile_index(parse_heightmap("0 0\n0 0")).ordering == ((0, 0), (0, 1), (1, 0), (1, 1))
    idx = tile_index(parse_heightmap("0 #\n0 0"))
    assert idx.n == 3
    assert idx.ordering == ((0, 0), (1, 0), (1, 1))
    with pytest.raises(KeyError):
        idx.position(0, 1)


@given(heightmaps(max_side=8))
@settings(max_examples=50)
def test_tile_index_bijection(hmap):
    idx = hmap.index
    assert idx.n == hmap.elevation.size - int(hmap.walls.sum())
    assert len(set(idx.ordering)) == idx.n
    for k in range(idx.n):
        assert idx.position(*idx.site(k)) == k
        assert not hmap.is_wall(*idx.site(k))
    assert list(idx.ordering) == sorted(idx.ordering)


def test_perlin_deterministic():
    a = generate_perlin_map(20, 15, 3)
    b = generate_perlin_map(20, 15, 3)
    assert a == b
    assert a != generate_perlin_map(20, 15, 4)


def test_perlin_threshold_one_has_no_walls():
    m = generate_perlin_map(12, 9, 0, wall_threshold=1.0)
    assert not m.walls.any()


@pytest.mark.parametrize("connected", [True, False])
def test_perlin_wall_fraction(connected):
    thr = 0.58
    fractions = []
    for seed in range(50):
        m = generate_perlin_map(20, 15, seed, wall_threshold=thr, elevation_levels=4, connected=connected)
        frac = m.walls.mean()
        assert abs(frac - (1 - thr)) <= 0.10
        fractions.append(frac)
        assert set(np.unique(m.elevation[~m.walls])) <= {0, 1, 2, 3}


def test_perlin_connected_single_region():
    from scipy import ndimage
    for seed in range(10):
        m = generate_perlin_map(20, 15, seed)
        assert ndimage.label(~m.walls)[1] == 1


@pytest.mark.parametrize("kwargs", [dict(width=1, height=5), dict(width=5, height=0),
                                    dict(width=5, height=5, wall_threshold=0.0),
                                    dict(width=5, height=5, elevation_levels=0)])
def test_perlin_invalid(kwargs):
    with pytest.raises(HeightmapError):
        generate_perlin_map(seed=0, **kwargs)
