from fractions import Fraction

import networkx as nx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pliable.errors import CapExceeded, InvalidInput
from pliable.exact import opt_bruteforce
from pliable.generators import (
    bipartite,
    clique,
    connected_bipartite,
    gen,
    gnp,
    grid,
    hardness_gadget,
    non_pliability_probe,
    path,
    planted_instance,
    to_structure,
    tournament,
    triangle_glued,
)
from pliable.graphs import components
from pliable.structures import disjoint_union, graph_structure, rescale

K2 = graph_structure("uv", [("u", "v")])


def test_basic_shapes():
    assert (len(grid(3, 3).vertices), grid(3, 3).m()) == (9, 12)
    assert clique(5).m() == 10 and path(5).m() == 4
    assert gnp(8, 0).m() == 0 and gnp(8, 1).m() == 28
    assert bipartite(3, 4, 1).m() == 12


def test_seeds_are_reproducible():
    assert gnp(10, Fraction(1, 2), 7).edges == gnp(10, Fraction(1, 2), 7).edges
    assert tournament(6, 3) == tournament(6, 3)
    assert gen("gnp", 7, n=10).edges == gnp(10, Fraction(1, 2), 7).edges


def test_bad_parameters():
    with pytest.raises(InvalidInput):
        gnp(4, Fraction(3, 2))
    with pytest.raises(InvalidInput):
        gen("hexagon")
    with pytest.raises(InvalidInput):
        connected_bipartite(0, 3, 1)


def test_tournament_one_arc_per_pair():
    T = tournament(6, 1)
    arcs = set(T.table("e"))
    assert len(arcs) == 15
    assert all((b, a) not in arcs for a, b in arcs)


def test_triangle_glued_counts():
    H = triangle_glued(path(3))
    assert len(H.vertices) == 5 and H.m() == 6


def test_gadget_on_triangle_and_path():
    K3 = clique(3)
    gd = hardness_gadget(K3, {"0": 1, "1": 2, "2": 3})
    assert gd.k == 3 and len(gd.A) == 3 and gd.B.norm1() == 3
    assert opt_bruteforce(gd.A, gd.B).value == 3
    P3 = path(3)
    gd = hardness_gadget(P3, {"0": 1, "1": 2, "2": 3})
    assert opt_bruteforce(gd.A, gd.B).value == 2


def test_gadget_rejects_improper_coloring():
    with pytest.raises(InvalidInput):
        hardness_gadget(path(2), {"0": 1, "1": 1})


def test_planted_instance_reaches_full_score():
    G, col, planted = planted_instance(8, 4, Fraction(1, 3), seed=2)
    assert sorted(col[v] for v in planted) == [1, 2, 3, 4]
    gd = hardness_gadget(G, col, seed=2)
    assert opt_bruteforce(gd.A, gd.B).value == 6


def test_probe_matching_and_path():
    M = disjoint_union([K2, K2, K2])
    rep = non_pliability_probe(M, 2)
    assert rep.loss == 0 and not rep.exceeds_eps
    rep = non_pliability_probe(to_structure(path(3)), 2)
    assert rep.loss == 0


def test_probe_tournament_loses_weight():
    rep = non_pliability_probe(tournament(5, 0), 2, eps=Fraction(1, 4))
    assert rep.loss >= Fraction(1, 4) and rep.exceeds_eps
    assert rep.identity_value == 10


def test_probe_cap():
    with pytest.raises(CapExceeded):
        non_pliability_probe(tournament(5, 0), 2, cap=100)


# properties


@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 10**6))
def test_connected_bipartite_is_connected_bipartite(a, b, seed):
    G = connected_bipartite(a, b, Fraction(1, 3), seed)
    H = nx.Graph(G.edges)
    H.add_nodes_from(G.vertices)
    assert len(components(G)) == 1 and nx.is_bipartite(H)


@given(st.integers(3, 9), st.integers(3, 4), st.integers(0, 10**6))
def test_planted_coloring_is_proper(n, k, seed):
    if n < k:
        return
    G, col, planted = planted_instance(n, k, Fraction(1, 2), seed)
    assert all(col[u] != col[v] for u, v in G.edges)
    assert all(G.has_edge(u, v) for i, u in enumerate(planted) for v in planted[i + 1:])


@given(st.integers(2, 4), st.integers(0, 10**6))
def test_bipartite_opt_equals_weight(n, seed):
    G = connected_bipartite(n, n, Fraction(1, 2), seed)
    A = to_structure(G)
    assert opt_bruteforce(A, rescale(K2, 1)).value == A.norm1()
