import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from graphexplore.graph import (Graph, NoPathError, distances_from, is_connected, largest_component,
                                nearest_of_set, shortest_path)

from conftest import floyd_warshall, grid_graph, path_graph, random_connected_graph, star_graph


def test_from_edges_normalises():
    g = Graph.from_edges(3, [(0, 1), (1, 0), (1, 1), (2, 1)])
    assert g.adjacency == ((1,), (0, 2), (1,))
    assert g.num_edges == 2


def test_symmetry_and_edge_count(rng):
    for _ in range(20):
        g = random_connected_graph(rng, int(rng.integers(1, 30)))
        for u in range(g.num_nodes):
            assert u not in g.adjacency[u]
            assert list(g.adjacency[u]) == sorted(set(g.adjacency[u]))
            for v in g.adjacency[u]:
                assert u in g.adjacency[v]
        assert g.num_edges == sum(map(len, g.adjacency)) // 2 == len(g.edges())


def test_shortest_path_examples():
    assert shortest_path(path_graph(4), 0, 3) == [0, 1, 2, 3]
    assert shortest_path(path_graph(4), 2, 2) == [2]
    assert len(shortest_path(grid_graph(3, 3), 0, 8)) - 1 == 4


def test_shortest_path_unreachable():
    g = Graph.from_edges(3, [(0, 1)])
    with pytest.raises(NoPathError):
        shortest_path(g, 0, 2)


def test_nearest_of_set_examples():
    star = star_graph(3)
    assert nearest_of_set(star, 0, {3, 1}) == (1, 1)
    p = path_graph(5)
    assert nearest_of_set(p, 2, {0, 4}) == (0, 2)
    assert nearest_of_set(p, 1, {0, 4}) == (0, 1)


def test_nearest_of_set_errors():
    with pytest.raises(ValueError):
        nearest_of_set(path_graph(3), 0, set())
    with pytest.raises(NoPathError):
        nearest_of_set(Graph.from_edges(3, [(0, 1)]), 0, {2})


def test_distances_from_examples():
    assert distances_from(Graph.from_edges(1, []), 0).tolist() == [0]
    assert distances_from(path_graph(3), 0).tolist() == [0, 1, 2]
    assert distances_from(Graph.from_edges(2, []), 0).tolist() == [0, np.inf]


def test_against_all_pairs_oracle(rng):
    for _ in range(15):
        g = random_connected_graph(rng, int(rng.integers(2, 25)))
        d = floyd_warshall(g)
        for s in range(g.num_nodes):
            ds = distances_from(g, s)
            assert np.array_equal(ds, d[s])
            for u, v in g.edges():
                assert abs(ds[u] - ds[v]) <= 1
            t = int(rng.integers(g.num_nodes))
            path = shortest_path(g, s, t)
            assert len(path) - 1 == d[s, t]
            assert all(b in g.adjacency[a] for a, b in zip(path, path[1:]))
        n = g.num_nodes
        assert np.all(d[:, None, :] <= d[:, :, None] + d[None, :, :] + 1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 50), st.integers(0, 2**32 - 1), st.data())
def test_nearest_of_set_matches_minimum_distance(n, seed, data):
    g = random_connected_graph(np.random.default_rng(seed), n)
    src = data.draw(st.integers(0, n - 1))
    targets = data.draw(st.sets(st.integers(0, n - 1), min_size=1))
    node, dist = nearest_of_set(g, src, targets)
    ds = distances_from(g, src)
    best = min(ds[t] for t in targets)
    assert dist == best
    assert node == min(t for t in targets if ds[t] == best)


def test_components():
    g = Graph.from_edges(6, [(0, 1), (2, 3), (3, 4)])
    assert largest_component(g) == [2, 3, 4]
    assert not is_connected(g)
    assert is_connected(path_graph(4))


def test_relabel_and_subgraph():
    g = path_graph(3).relabel([2, 0, 1])
    assert sorted(g.edges()) == [(0, 1), (0, 2)]
    sub, kept = grid_graph(2, 2).subgraph([3, 1])
    assert kept == [3, 1] and sub.edges() == [(0, 1)]
