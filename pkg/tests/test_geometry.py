from __future__ import annotations

import itertools

import networkx as nx
import numpy as np
import pytest

from torchplace.geometry import (UNREACHABLE, LightParams, block_empty, coverage_matrix,
                                 distance_cache, distance_field, light_levels)
from torchplace.heightmap import WALL, Heightmap, parse_heightmap

from conftest import flat, random_map


def block_graph_distances(hmap, source, cap, headroom=6):
    """Dijkstra on an explicit 3D block graph, taller than the BFS slab."""
    z = hmap.elevation
    top = int(z.max()) + cap + headroom
    g = nx.Graph()
    for i, j in np.ndindex(z.shape):
        if z[i, j] == WALL:
            continue
        for k in range(int(z[i, j]), top):
            g.add_node((i, j, k))
    for (i, j, k) in list(g.nodes):
        for di, dj, dk in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
            nb = (i + di, j + dj, k + dk)
            if nb in g:
                g.add_edge((i, j, k), nb)
    si, sj = hmap.index.site(source)
    lengths = nx.single_source_dijkstra_path_length(g, (si, sj, int(z[si, sj])), cutoff=cap)
    out = np.full(hmap.n, UNREACHABLE)
    for t, (i, j) in enumerate(hmap.index.ordering):
        out[t] = lengths.get((i, j, int(z[i, j])), UNREACHABLE)
    return out


def test_block_empty_rule():
    m = parse_heightmap("0 2\n# 1")
    assert block_empty(m, 0, 0, 0)
    assert not block_empty(m, 0, 0, -1)
    assert not block_empty(m, 0, 1, 1)
    assert block_empty(m, 0, 1, 2)
    assert not any(block_empty(m, 1, 0, k) for k in range(-2, 30))
    assert not block_empty(m, -1, 0, 5)
    assert not block_empty(m, 0, 2, 5)


def test_block_empty_random(rng):
    for _ in range(20):
        m = random_map(rng, 4, 5, 4)
        for i, j, k in itertools.product(range(4), range(5), range(-1, 6)):
            expect = m.elevation[i, j] != WALL and k >= m.elevation[i, j]
            assert block_empty(m, i, j, k) == expect


def test_fig3_flat_corridor(fixture_map):
    m = fixture_map("distance_flat.txt")
    field = distance_field(m, m.index.position(1, 0), 14)
    expected = {(1, 1): 1, (1, 2): 2, (0, 2): 3, (1, 3): 3, (2, 3): 4}
    for site, d in expected.items():
        assert field[m.index.position(*site)] == d


def test_fig3_elevation_step(fixture_map):
    m = fixture_map("distance_step.txt")
    field = distance_field(m, m.index.position(0, 0), 14)
    expected = {(0, 1): 1, (0, 2): 2, (1, 0): 1, (1, 1): 2, (2, 0): 2,
                (2, 1): 4, (1, 2): 5, (2, 2): 6}
    for site, d in expected.items():
        assert field[m.index.position(*site)] == d


def test_distance_source_zero_and_cap(rng):
    m = random_map(rng, 6, 6, 4)
    for s in range(m.n):
        f = distance_field(m, s, 3)
        assert f[s] == 0
        assert f.dist.max() <= 3


def test_distance_errors():
    m = parse_heightmap("0 #")
    with pytest.raises(ValueError):
        distance_field(m, 1, 5)
    with pytest.raises(ValueError):
        distance_field(m, 0, -1)


@pytest.mark.parametrize("seed", range(6))
def test_distance_matches_dijkstra(seed):
    rng = np.random.default_rng(seed)
    m = random_map(rng, 8, 8, int(rng.integers(2, 5)), 0.25)
    cap = 14
    for s in range(0, m.n, max(1, m.n // 6)):
        assert np.array_equal(distance_field(m, s, cap).dist, block_graph_distances(m, s, cap))


def test_distance_symmetry_and_triangle(rng):
    for _ in range(5):
        m = random_map(rng, 5, 5, 3)
        d = np.array([distance_field(m, s, 30).dist for s in range(m.n)])
        assert np.array_equal(d, d.T)
        for s, t, u in itertools.product(range(m.n), repeat=3):
            if min(d[s, t], d[t, u], d[s, u]) >= 0:
                assert d[s, u] <= d[s, t] + d[t, u]


def test_coverage_examples(fixture_map):
    assert coverage_matrix(flat(1, 1)).d.tolist() == [[1]]
    assert coverage_matrix(flat(1, 2)).d.tolist() == [[1, 1], [1, 1]]
    m = fixture_map("distance_flat.txt")
    row = coverage_matrix(m).d[m.index.position(1, 0)]
    assert row.tolist() == [1] * m.n  # all labelled distances are <= 6


def test_coverage_threshold_on_corridor():
    m = flat(1, 9)
    d = coverage_matrix(m).d
    assert d[0].tolist() == [1] * 7 + [0, 0]
    d2 = coverage_matrix(m, LightParams(14, 12)).d
    assert d2[4].tolist() == [0, 0, 1, 1, 1, 1, 1, 0, 0]


def test_coverage_symmetric_unit_diagonal(rng):
    for _ in range(10):
        m = random_map(rng, 7, 7, 4)
        d = coverage_matrix(m).d
        assert np.array_equal(d, d.T)
        assert np.all(np.diag(d) == 1)


def test_light_empty_selection(rng):
    m = random_map(rng, 5, 5)
    layout = light_levels(m, np.zeros(m.n, dtype=int))
    assert np.all(layout.light == 0)
    assert layout.violations == m.n


def test_light_at_torch_and_bounds(rng):
    m = random_map(rng, 6, 6)
    x = (rng.random(m.n) < 0.2).astype(int)
    x[0] = 1
    layout = light_levels(m, x)
    assert np.all(layout.light[x == 1] == 14)
    assert layout.light.min() >= 0 and layout.light.max() <= 14
    assert layout.violations == int((layout.light < 8).sum())


def test_light_shape_error():
    with pytest.raises(ValueError):
        light_levels(flat(2, 2), [1, 0])


def test_light_coverage_equivalence_exhaustive(rng):
    for _ in range(4):
        m = random_map(rng, 4, 4, 3, 0.3, max_n=12)
        d = coverage_matrix(m).d
        for bits in itertools.product((0, 1), repeat=m.n):
            x = np.array(bits)
            layout = light_levels(m, x)
            assert np.array_equal(layout.light >= 8, d @ x >= 1)


def test_light_coverage_equivalence_sampled(rng):
    for _ in range(10):
        m = random_map(rng, 8, 8, 4, 0.2)
        d = coverage_matrix(m).d
        for _ in range(20):
            x = (rng.random(m.n) < rng.uniform(0.02, 0.3)).astype(int)
            assert light_levels(m, x).violations == int((d @ x < 1).sum())


def test_light_monotone(rng):
    m = random_map(rng, 8, 8, 3)
    x = np.zeros(m.n, dtype=int)
    prev = light_levels(m, x).light
    for t in rng.permutation(m.n)[:10]:
        x[t] = 1
        cur = light_levels(m, x).light
        assert np.all(cur >= prev)
        prev = cur


def test_distance_cache_memoizes():
    m = flat(3, 3)
    cache = distance_cache(m, 6)
    assert cache[0] is cache[0]
    assert distance_cache(Heightmap(np.zeros((3, 3))), 6) is cache
