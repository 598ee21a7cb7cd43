import itertools
from fractions import Fraction

from hypothesis import given
from hypothesis import strategies as st

from pliable.dense import (
    Partition,
    clique,
    clique_overcast,
    counting_check,
    densities,
    extension_check,
    homogeneity_defect,
    quotient,
    quotient_overcast,
    regularity_search,
)
from pliable.generators import gnp
from pliable.graphs import Graph
from pliable.overcast import overcast_verify
from pliable.structures import graph_structure, rescale


def multipartite(sizes):
    parts, vid = [], 0
    for s in sizes:
        parts.append([str(vid + i) for i in range(s)])
        vid += s
    verts = [v for p in parts for v in p]
    edges = [(u, v) for a, b in itertools.combinations(range(len(parts)), 2) for u in parts[a] for v in parts[b]]
    return graph_structure(verts, edges), Partition(parts)


def test_quotient_c4():
    C4 = graph_structure("1234", [("1", "2"), ("2", "3"), ("3", "4"), ("4", "1")])
    Q = quotient(C4, Partition([["1", "3"], ["2", "4"]]))
    assert Q.value("e", ("0", "1")) == Q.value("e", ("1", "0")) == 4
    assert Q.value("e", ("0", "0")) == Q.value("e", ("1", "1")) == 0
    assert Q.norm1() == 8


def test_quotient_trivial_partitions():
    K4 = clique(4)
    Q = quotient(K4, Partition([list(K4.domain)]))
    assert Q.value("e", ("0", "0")) == K4.norm1()
    Q = quotient(K4, Partition([[v] for v in K4.domain]))
    assert Q.norm1() == 12 and all(Q.value("e", (str(i), str(i))) == 0 for i in range(4))


def test_homogeneity_examples():
    G, P = multipartite([3, 3])
    assert homogeneity_defect(G, *P.parts).defect == 0
    E = graph_structure("abcdef", [])
    assert homogeneity_defect(E, "abc", "def").defect == 0
    one = graph_structure("abcdef", [("a", "d")])
    rep = homogeneity_defect(one, "abc", "def")
    assert rep.density == Fraction(1, 9)
    assert rep.defect == Fraction(8, 81)


def test_clique_overcast_examples():
    co = clique_overcast(3, 3)
    assert co.lam == 1 and co.forward_factor == co.backward_factor == Fraction(2, 3)
    co = clique_overcast(4, 2)
    assert co.lam == 6
    rep = overcast_verify(co.forward, co.Kn, rescale(co.Kk, Fraction(1, 2)))
    assert rep.ok and set(rep.coverage.values()) == {3}
    co = clique_overcast(6, 3)
    assert (co.lam, co.forward_factor, co.backward_factor) == (5, Fraction(2, 3), Fraction(5, 6))
    for om, A, B, f in ((co.forward, co.Kn, co.Kk, co.forward_factor), (co.backward, co.Kk, co.Kn, co.backward_factor)):
        rep = overcast_verify(om, A, rescale(B, f))
        assert rep.ok and set(rep.slack.values()) == {0}


def test_clique_overcast_injection_back():
    co = clique_overcast(4, 2, back="injection")
    assert co.backward_factor == 1
    assert overcast_verify(co.backward, co.Kk, co.Kn).ok


def test_counting_examples():
    G = gnp(12, Fraction(1, 2), seed=1)
    P = Partition([[str(i) for i in range(4 * j, 4 * j + 4)] for j in range(3)])
    rep = counting_check(G, P, [])
    assert rep.total == 64 and rep.contained
    M, Pm = multipartite([2, 2, 2])
    rep = counting_check(M, Pm, [(0, 1), (1, 2), (0, 2)])
    assert rep.total == 8 and rep.halfwidth == 0 and rep.contained
    rep = counting_check(G, P, [(0, 1), (1, 2), (0, 2)])
    assert rep.contained and rep.eps_exact


def test_extension_examples():
    M, Pm = multipartite([2, 2, 2])
    assert extension_check(M, Pm, [(0, 1), (1, 2), (0, 2)], (0, 1)).exceptions == []
    G = gnp(12, Fraction(1, 2), seed=1)
    P = Partition([[str(i) for i in range(4 * j, 4 * j + 4)] for j in range(3)])
    rep = extension_check(G, P, [(0, 1), (1, 2), (0, 2)], (0, 1))
    assert rep.within_bound
    E = graph_structure([str(i) for i in range(4)], [("0", "2")])
    Pe = Partition([["0", "1"], ["2", "3"]])
    rep = extension_check(E, Pe, [(0, 1)], (0, 1))
    assert rep.pinned[("1", "3")] == 0


def test_quotient_overcast_clique():
    G = clique(6)
    P = Partition([["v0", "v1"], ["v2", "v3"], ["v4", "v5"]])
    res = quotient_overcast(G, P, 1)
    assert res.accepted and res.factor >= Fraction(1, 2)
    assert overcast_verify(res.forward, G, res.Q).ok
    assert overcast_verify(res.backward, res.Q, rescale(G, res.factor)).ok


def test_quotient_overcast_bipartite():
    G, P = multipartite([3, 3])
    res = quotient_overcast(G, P, Fraction(1, 2))
    assert res.accepted
    assert overcast_verify(res.backward, res.Q, rescale(G, res.factor)).ok


def test_quotient_overcast_matching_rejected():
    G = graph_structure([str(i) for i in range(6)], [("0", "1"), ("2", "3"), ("4", "5")])
    P = Partition([["0", "2", "4"], ["1", "3", "5"]])
    res = quotient_overcast(G, P, Fraction(1, 2))
    assert not res.accepted and res.diagnosis


def test_regularity_search_examples():
    G, P = multipartite([2, 2, 2])
    best, defect = regularity_search(G, 3, budget=30, seed=0)
    assert defect == 0
    single, d1 = regularity_search(clique(4), 4)
    assert d1 == 0 and all(len(p) == 1 for p in single.parts)
    H = gnp(10, Fraction(1, 2), seed=4)
    part, d2 = regularity_search(H, 2, budget=10, seed=1)
    assert part.is_balanced() and d2 >= 0


def test_partition_json_round_trip():
    P = Partition([["a", "b"], ["c"]])
    assert Partition.from_json(P.to_json()).parts == P.parts


# properties


@given(st.integers(4, 9), st.integers(0, 10**6), st.integers(2, 3))
def test_quotient_preserves_weight(n, seed, k):
    G = gnp(n, Fraction(1, 2), seed)
    verts = list(G.vertices)
    P = Partition([verts[i::k] for i in range(k)])
    S = graph_structure(G.vertices, G.edges)
    assert quotient(G, P).norm1() == S.norm1()
    dens = densities(G, P)
    assert all(0 <= x <= 1 for row in dens for x in row)


@given(st.integers(0, 10**6))
def test_counting_containment_with_measured_defect(seed):
    G = gnp(6, Fraction(1, 2), seed)
    P = Partition([["0", "1"], ["2", "3"], ["4", "5"]])
    assert counting_check(G, P, [(0, 1), (1, 2)]).contained


@given(st.integers(0, 10**6))
def test_quotient_overcast_never_false(seed):
    G = gnp(6, Fraction(2, 3), seed)
    P = Partition([["0", "1"], ["2", "3"], ["4", "5"]])
    res = quotient_overcast(G, P, 1)
    assert overcast_verify(res.forward, graph_structure(G.vertices, G.edges), res.Q).ok
    if res.accepted:
        assert overcast_verify(res.backward, res.Q, rescale(graph_structure(G.vertices, G.edges), res.factor)).ok
    else:
        assert res.diagnosis


def test_graph_input_accepted():
    G = Graph("ab", [("a", "b")])
    assert quotient(G, Partition([["a"], ["b"]])).norm1() == 2
