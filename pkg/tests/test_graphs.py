import math

import networkx as nx
import pytest
from hypothesis import given

from helpers import graphs
from pliable.errors import InvalidInput
from pliable.graphs import (
    Graph,
    best_decomposition,
    bfs_layers,
    components,
    degeneracy,
    degeneracy_orientation,
    girth,
    grid_graph,
    is_elimination_forest,
    forest_depth,
    max_in_degree,
    parameter,
    tree_decomposition,
    treedepth,
)


def path(n):
    return Graph(range(n), [(i, i + 1) for i in range(n - 1)])


def clique(n):
    return Graph(range(n), [(i, j) for i in range(n) for j in range(i + 1, n)])


def test_components_examples():
    two = Graph("abcd", [("a", "b"), ("c", "d")])
    assert sorted(c.n() for c in components(two)) == [2, 2]
    assert len(components(path(4))) == 1
    assert [c.n() for c in components(Graph("xyz"))] == [1, 1, 1]


def test_parameter_examples():
    assert parameter(clique(3), "tw") == (2, True)
    assert parameter(path(4), "td") == (3, True)
    K2K3 = Graph("abcde", [("a", "b"), ("c", "d"), ("d", "e"), ("c", "e")])
    assert parameter(K2K3, "cc") == (3, True)
    assert parameter(K2K3, "size") == (5, True)
    with pytest.raises(InvalidInput):
        parameter(K2K3, "hadwiger")


def test_tree_decomposition_examples():
    assert tree_decomposition(path(5), "exact").width == 1
    assert tree_decomposition(clique(4), "exact").width == 3
    T = tree_decomposition(grid_graph((3, 3)), "exact")
    assert T.width == 3 and T.is_valid(grid_graph((3, 3)))


def test_bfs_layers_examples():
    star = Graph("cxyz", [("c", "x"), ("c", "y"), ("c", "z")])
    assert bfs_layers(star, "c") == [{"c"}, {"x", "y", "z"}]
    assert bfs_layers(path(3), "0") == [{"0"}, {"1"}, {"2"}]
    assert len(bfs_layers(grid_graph((4, 4)), "0_0")) == 7


def test_degeneracy_examples():
    tree = Graph("abcde", [("a", "b"), ("a", "c"), ("c", "d"), ("c", "e")])
    assert max_in_degree(degeneracy_orientation(tree)) <= 1
    assert max_in_degree(degeneracy_orientation(clique(4))) <= 3
    assert max_in_degree(degeneracy_orientation(grid_graph((3, 3)))) <= 2


def test_girth_examples():
    assert girth(clique(3)) == 3
    assert girth(grid_graph((3, 3))) == 4
    assert girth(path(5)) == math.inf


def test_graph_json_round_trip():
    G = Graph("ab", [("a", "b")], edge_weights={("a", "b"): "3/2"})
    H = Graph.from_json(G.to_json())
    assert H.edges == G.edges and H.weight("a", "b") == G.weight("a", "b")


def _nx(G):
    H = nx.Graph()
    H.add_nodes_from(G.vertices)
    H.add_edges_from(G.edges)
    return H


@given(graphs())
def test_decompositions_valid_and_exact_is_best(G):
    exact = tree_decomposition(G, "exact")
    assert exact.is_valid(G)
    for m in ("min_fill", "min_degree"):
        T = tree_decomposition(G, m)
        assert T.is_valid(G)
        assert exact.width <= T.width


@given(graphs())
def test_bfs_edges_span_adjacent_layers(G):
    layers = bfs_layers(G)
    where = {v: i for i, L in enumerate(layers) for v in L}
    assert set(where) == set(G.vertices)
    for u, v in G.edges:
        assert abs(where[u] - where[v]) <= 1


@given(graphs())
def test_orientation_matches_independent_degeneracy(G):
    arcs = degeneracy_orientation(G)
    assert sorted(tuple(sorted(a)) for a in arcs) == sorted(tuple(sorted(e)) for e in G.edges)
    core = max(nx.core_number(_nx(G)).values(), default=0)
    assert degeneracy(G) == core
    assert max_in_degree(arcs) <= core


@given(graphs(max_size=7))
def test_treedepth_forest_valid(G):
    d, parent = treedepth(G)
    assert is_elimination_forest(G, parent)
    assert forest_depth(parent) == d
    tw, _ = parameter(G, "tw")
    assert tw + 1 <= max(d, 0) or G.n() == 0


@given(graphs())
def test_girth_matches_networkx(G):
    g = girth(G)
    cycles = nx.minimum_cycle_basis(_nx(G))
    expected = min((len(c) for c in cycles), default=math.inf)
    assert g == expected


@given(graphs())
def test_best_decomposition_exact_flag(G):
    T, exact = best_decomposition(G)
    assert T.is_valid(G) and exact
