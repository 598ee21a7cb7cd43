import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import K, P, random_graph_structure, random_structure, structures
from pliable.dense import clique_overcast
from pliable.errors import InvalidInput
from pliable.exact import opt_bruteforce
from pliable.overcast import (
    Overcast,
    OvercastCertificate,
    best_factor,
    compose,
    couple,
    edit_overcast,
    measured_factor,
    opt_distance_bound,
    overcast_find,
    overcast_verify,
)
from pliable.structures import disjoint_union, edit_distance, graph_structure, rescale

K2 = graph_structure("uv", [("u", "v")])


def ident(A):
    return Overcast([({a: a for a in A.domain}, 1)])


def test_find_identity():
    A = K(3)
    res = overcast_find(A, A)
    assert isinstance(res, Overcast)
    assert overcast_verify(res, A, A).ok


def test_find_path_to_weighted_edge():
    res = overcast_find(P(3), rescale(K2, 2))
    assert isinstance(res, Overcast) and len(res) == 1
    assert overcast_verify(res, P(3), rescale(K2, 2)).ok


def test_find_certificate_k3_vs_3k2():
    B = rescale(K2, 3)
    res = overcast_find(K(3), B)
    assert isinstance(res, OvercastCertificate)
    assert res.opt_A == opt_bruteforce(K(3), res.C).value
    assert res.opt_B == opt_bruteforce(B, res.C).value
    assert res.opt_A < res.opt_B
    assert opt_bruteforce(K(3), K2).value == 4 < opt_bruteforce(B, K2).value == 6


def test_verify_identity_zero_slack():
    rep = overcast_verify(ident(K(3)), K(3), K(3))
    assert rep.ok and set(rep.slack.values()) == {0}


def test_verify_clique_overcast_zero_slack():
    co = clique_overcast(6, 3)
    assert co.lam == 5
    target = rescale(co.Kk, Fraction(2, 3))
    rep = overcast_verify(co.forward, co.Kn, target)
    assert rep.ok and set(rep.slack.values()) == {0}
    assert set(rep.coverage.values()) == {Fraction(10, 3)}


def test_verify_reports_missed_tuple():
    om = Overcast([({"v0": "u", "v1": "u", "v2": "u"}, 1)])
    rep = overcast_verify(om, K(3), K2)
    assert not rep.ok and set(rep.failures) == {("e", ("u", "v")), ("e", ("v", "u"))}


def test_compose_examples():
    A = K(3)
    assert compose(ident(A), ident(A)).support == ident(A).support
    g1 = Overcast([({"a": "x"}, 1)])
    g2 = Overcast([({"x": "y"}, 1)])
    assert compose(g1, g2).support == Overcast([({"a": "y"}, 1)]).support
    with pytest.raises(InvalidInput):
        compose(g1, Overcast([({"z": "y"}, 1)]))


def test_compose_through_small_structure():
    # K4 -> (2/3) 2K3 -> (3/4)-scaled back; every composed map has image size <= 3
    co = clique_overcast(4, 3)
    om = compose(co.forward, co.backward)
    target = rescale(co.Kn, co.forward_factor * co.backward_factor)
    assert overcast_verify(om, co.Kn, target).ok
    assert all(len(set(g.values())) <= 3 for g, _ in om)


def test_distance_examples():
    assert opt_distance_bound(K(3), K(3), [0])["accepted"][0]
    assert opt_distance_bound(P(3), rescale(K2, 2), [0])["accepted"][0]
    K3w = rescale(K(3, "w"), 5)
    res = opt_distance_bound(K(6), K3w, [Fraction(1, 2), Fraction(1, 5), Fraction(1, 10)])
    assert res["forward_factor"] >= Fraction(2, 3) and res["backward_factor"] == 1
    assert res["accepted"][Fraction(1, 2)]
    assert not res["accepted"][Fraction(1, 10)]
    least = res["least"]
    assert overcast_verify(least.forward, K(6), rescale(K3w, least.factor)).ok


def test_distance_merging_components():
    A = disjoint_union([rescale(P(3), 2), rescale(P(3), 3)])
    assert opt_distance_bound(A, rescale(P(3), 5), [0])["accepted"][0]


def test_edit_overcast_examples():
    om, delta = edit_overcast(K(3), K(3))
    assert delta == 0 and om.support == ident(K(3)).support
    K3m = graph_structure(["v0", "v1", "v2"], [("v0", "v1"), ("v1", "v2")])
    for mode in ("uniform", "derandomized"):
        om, delta = edit_overcast(K(3), K3m, {f"v{i}": f"v{i}" for i in range(3)}, collapse=mode)
        assert delta == Fraction(2, 3)
        assert overcast_verify(om, K(3), rescale(K3m, Fraction(1, 3))).ok


def test_couple_marginals():
    a = Overcast([({"a": "x"}, Fraction(1, 3)), ({"a": "y"}, Fraction(2, 3))])
    b = Overcast([({"b": "z"}, Fraction(1, 2)), ({"b": "w"}, Fraction(1, 2))])
    j = couple([a, b])
    assert len(j) <= 3
    for om, key in ((a, "a"), (b, "b")):
        marg = {}
        for g, p in j:
            marg[g[key]] = marg.get(g[key], 0) + p
        assert marg == {g[key]: p for g, p in om}


# properties


@given(st.integers(0, 10**6))
def test_dichotomy_and_forward_direction(seed):
    rng = random.Random(seed)
    A = random_structure(rng, rng.randint(1, 3), density=0.4)
    B = random_structure(rng, rng.randint(1, 3), density=0.4, prefix="b")
    res = overcast_find(A, B)
    Cs = [random_structure(rng, rng.randint(1, 3), density=0.5, prefix="c") for _ in range(5)]
    if isinstance(res, Overcast):
        assert overcast_verify(res, A, B).ok
        for C in Cs:
            assert opt_bruteforce(A, C).value >= opt_bruteforce(B, C).value
    else:
        assert opt_bruteforce(A, res.C).value == res.opt_A < res.opt_B == opt_bruteforce(B, res.C).value


@given(st.integers(0, 10**6))
def test_distance_symmetric(seed):
    rng = random.Random(seed)
    A = random_structure(rng, rng.randint(1, 3), density=0.4)
    B = random_structure(rng, rng.randint(1, 3), density=0.4, prefix="b")
    eps = [0, Fraction(1, 2), 1, 3]
    assert opt_distance_bound(A, B, eps)["accepted"] == opt_distance_bound(B, A, eps)["accepted"]


@given(st.integers(0, 10**6))
def test_compose_multiplies_factors(seed):
    rng = random.Random(seed)
    A = random_structure(rng, 2, density=0.6)
    B = random_structure(rng, 2, density=0.6, prefix="b")
    C = random_structure(rng, 2, density=0.6, prefix="c")
    f1, f2 = best_factor(A, B), best_factor(B, C)
    if f1.factor is None or f2.factor is None:
        return
    om = compose(f1.overcast, f2.overcast)
    assert overcast_verify(om, A, rescale(C, min(f1.factor, 1) * min(f2.factor, 1))).ok


@given(st.integers(0, 10**6))
def test_edit_overcast_linear_bound(seed):
    rng = random.Random(seed)
    n = rng.randint(2, 4)
    A = random_graph_structure(rng, n, 0.6, "a", weights=True)
    B = random_graph_structure(rng, n, 0.6, "b", weights=True)
    if A.norm1() == 0 or B.norm1() == 0:
        return
    phi = dict(zip(A.domain, B.domain))
    om, delta = edit_overcast(A, B, phi)
    d = edit_distance(A, B, phi)
    C = A.signature.c_sigma
    assert delta == C * d / (1 + C * d)
    assert overcast_verify(om, A, rescale(B, 1 - delta)).ok


@given(structures(max_size=3))
def test_measured_factor_identity(A):
    f = measured_factor(ident(A), A, A)
    assert f is None or f == 1
