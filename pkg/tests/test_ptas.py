import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import random_graph_structure
from pliable.errors import InvalidInput, VerificationError
from pliable.exact import opt_bruteforce
from pliable.fragility import FractionalModulator, baker_modulator, fragile_to_pliable
from pliable.graphs import Graph, components, grid_graph
from pliable.overcast import Overcast
from pliable.ptas import ptas_constructive, ptas_value
from pliable.structures import graph_structure, val

K2 = graph_structure("uv", [("u", "v")])
K3 = graph_structure("abc", [("a", "b"), ("b", "c"), ("a", "c")])


def grid_instance(n):
    G = grid_graph((n, n))
    return G, graph_structure(G.vertices, G.edges)


def ident(A):
    return Overcast([({a: a for a in A.domain}, 1)])


def test_value_mode_identity_witness_is_exact():
    _, A = grid_instance(3)
    rep = ptas_value(A, K2, 0, A, ident(A), ident(A))
    assert rep.lower == rep.upper == opt_bruteforce(A, K2).value == 24
    assert rep.ratio == 1


def test_value_mode_grid_bracket():
    G, A = grid_instance(3)
    res = fragile_to_pliable(A, baker_modulator(G, 3, "0_0"))
    rep = ptas_value(A, K2, 2, res.B, res.omega, res.omega_back)
    opt = opt_bruteforce(A, K2).value
    assert rep.lower <= opt <= rep.upper
    assert (rep.lower, rep.upper, rep.ratio) == (8, 24, 3)
    assert rep.ratio <= rep.details["ratio_bound"]


def test_value_mode_rejects_weak_witness():
    G, A = grid_instance(3)
    res = fragile_to_pliable(A, baker_modulator(G, 3, "0_0"))
    with pytest.raises(VerificationError):
        ptas_value(A, K2, 1, res.B, res.omega, res.omega_back)


def test_constructive_grid():
    G, A = grid_instance(3)
    rep = ptas_constructive(A, K2, baker_modulator(G, 3, "0_0"))
    assert rep.lower == val(A, K2, rep.witness) == 24
    assert rep.upper == 72 and rep.details["guarantee_factor"] == Fraction(1, 3)
    rep = ptas_constructive(A, K2, baker_modulator(G, 9, "0_0"))
    assert rep.lower == 24 and rep.upper == Fraction(216, 7)


def test_constructive_grid_three_colors():
    G, A = grid_instance(4)
    rep = ptas_constructive(A, K3, baker_modulator(G, 4, "0_0"))
    assert rep.lower == 48 == val(A, K3, rep.witness)


def test_constructive_rejects_edge_modulator():
    G = Graph("ab", [("a", "b")])
    pi = FractionalModulator(G, "edge", [([("a", "b")], 1)])
    with pytest.raises(InvalidInput):
        ptas_constructive(K2.__class__(K2.signature, "ab", {"e": {("a", "b"): 1}}), K2, pi)


# properties


@given(st.integers(0, 10**6), st.integers(2, 4))
def test_constructive_brackets_opt(seed, ell):
    rng = random.Random(seed)
    A = random_graph_structure(rng, rng.randint(3, 6), 0.5, "a", weights=True)
    G = Graph(A.domain, [(x[0], x[1]) for n, x, v in A.positive() if x[0] < x[1]])
    pi = baker_modulator(G, ell, [C.vertices[0] for C in components(G)])
    rep = ptas_constructive(A, K2, pi)
    opt = opt_bruteforce(A, K2).value
    assert rep.lower == val(A, K2, rep.witness) <= opt
    if rep.upper is not None:
        assert opt <= rep.upper


@given(st.integers(0, 10**6))
def test_value_mode_brackets_opt(seed):
    rng = random.Random(seed)
    A = random_graph_structure(rng, rng.randint(2, 4), 0.6, "a", weights=True)
    rep = ptas_value(A, K2, 0, A, ident(A), ident(A))
    assert rep.lower <= opt_bruteforce(A, K2).value <= rep.upper
