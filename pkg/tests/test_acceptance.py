"""End-to-end acceptance checks. Each criterion prints one PASS/FAIL line with its runtime.

Run directly (`python tests/test_acceptance.py`) for the summary alone, or through pytest.
"""

import random
import sys
import time
from fractions import Fraction
from math import comb
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import K, random_graph_structure, random_structure  # noqa: E402
from pliable.dense import Partition, clique, clique_overcast, counting_check, extension_check, quotient_overcast  # noqa: E402
from pliable.exact import opt_bruteforce, opt_treedec  # noqa: E402
from pliable.fragility import baker_modulator, bucket_edge_weights, fragile_to_pliable, grid_slab_cutter, path_cutter  # noqa: E402
from pliable.generators import (  # noqa: E402
    connected_bipartite,
    gnp,
    hardness_gadget,
    non_pliability_probe,
    planted_instance,
    to_structure,
    tournament,
    triangle_glued,
)
from pliable.graphs import Graph, grid_graph, parameter  # noqa: E402
from pliable.overcast import Overcast, edit_overcast, opt_distance_bound, overcast_find, overcast_verify  # noqa: E402
from pliable.ptas import ptas_value  # noqa: E402
from pliable.reductions import class_bound, pack, round_vectors, unpack_at  # noqa: E402
from pliable.relax import opt_sa  # noqa: E402
from pliable.structures import Signature, edit_distance, graph_structure, rescale  # noqa: E402

K2 = graph_structure("uv", [("u", "v")])
K3 = graph_structure("abc", [("a", "b"), ("b", "c"), ("a", "c")])


def c01_oracle_equivalence():
    rng = random.Random(1)
    bad = 0
    for i in range(200):
        A = random_structure(rng, rng.randint(1, 7), density=rng.choice([0.1, 0.2, 0.4]))
        B = random_structure(rng, rng.randint(1, 3), density=0.6, prefix="b")
        if opt_treedec(A, B).value != opt_bruteforce(A, B).value:
            bad += 1
    return bad == 0, f"{200 - bad}/200 exact matches"


def c02_sa_sandwich():
    lines = []
    ok = True
    for n in (3, 4):
        G = grid_graph((n, n))
        A = graph_structure(G.vertices, G.edges)
        for ell in (3, 4):
            res = fragile_to_pliable(A, baker_modulator(G, ell, "0_0"))
            rho = min(res.loss_factor, 1)
            eps = 1 / rho - 1  # smallest eps with r(eps) <= every witness factor
            for C in (K2, K3):
                rep = ptas_value(A, C, eps, res.B, res.omega, res.omega_back)
                opt = opt_treedec(A, C).value
                sa = opt_sa(A, C, rep.level)
                good = opt <= sa <= (1 + eps) ** 2 * opt and sa == rep.upper
                ok &= good
                lines.append(f"{n}x{n}/l={ell}/|C|={len(C)}: k+1={rep.level} sa/opt={sa / opt}")
    return ok, "; ".join(lines)


def c03_level_gap():
    a, b, o = opt_sa(K(3), K2, 2), opt_sa(K(3), K2, 3), opt_bruteforce(K(3), K2).value
    return (a, b, o) == (6, 4, 4), f"SA2={a} SA3={b} opt={o}"


def c04_dichotomy():
    rng = random.Random(4)
    found = certs = bad = 0
    for _ in range(100):
        A = random_structure(rng, rng.randint(1, 4), density=0.35)
        B = random_structure(rng, rng.randint(1, 4), density=0.35, prefix="b")
        res = overcast_find(A, B)
        if isinstance(res, Overcast):
            found += 1
            bad += not overcast_verify(res, A, B).ok
        else:
            certs += 1
            oa, ob = opt_bruteforce(A, res.C).value, opt_bruteforce(B, res.C).value
            bad += not (oa == res.opt_A and ob == res.opt_B and oa < ob)
    return bad == 0, f"{found} overcasts, {certs} certificates, {bad} failures"


def c05_clique_example():
    ok, parts = True, []
    for n, k in ((4, 2), (6, 3), (8, 4)):
        co = clique_overcast(n, k)
        f = overcast_verify(co.forward, co.Kn, rescale(co.Kk, 1 - Fraction(1, k)))
        b = overcast_verify(co.backward, co.Kk, rescale(co.Kn, 1 - Fraction(1, n)))
        good = f.ok and b.ok and set(f.slack.values()) == {0} and set(b.slack.values()) == {0}
        ok &= good
        parts.append(f"({n},{k}) lam={co.lam} {'zero slack' if good else 'FAILED'}")
    return ok, "; ".join(parts)


def c06_bipartite_and_triangles():
    bip = tri = 0
    for seed in range(20):
        rng = random.Random(seed)
        G = connected_bipartite(rng.randint(1, 5), rng.randint(1, 5), Fraction(1, 2), seed)
        A = to_structure(G)
        bip += opt_distance_bound(A, rescale(K2, G.m()), [0])["accepted"][0]
    for seed in range(5):
        # exact LP over 3^|V| maps: keep the glued graphs at 7-8 vertices
        base = connected_bipartite(2, 2, Fraction(seed % 3, 2), seed)
        H = triangle_glued(base)
        tri += opt_distance_bound(to_structure(H), rescale(K3, base.m()), [0])["accepted"][0]
    return bip == 20 and tri == 5, f"bipartite {bip}/20, triangle-decomposed {tri}/5"


def c07_edit_bound():
    rng = random.Random(7)
    good = total = 0
    while total < 50:
        n = rng.randint(2, 4)
        A = random_graph_structure(rng, n, 0.6, "a", weights=True)
        B = random_graph_structure(rng, n, 0.6, "b", weights=True)
        if A.norm1() == 0 or B.norm1() == 0:
            continue
        total += 1
        phi = dict(zip(A.domain, B.domain))
        om, delta = edit_overcast(A, B, phi)
        cd = A.signature.c_sigma * edit_distance(A, B, phi)
        good += delta == cd / (1 + cd) and overcast_verify(om, A, rescale(B, 1 - delta)).ok
    return good == 50, f"{good}/50 verified"


def c08_fragile_to_pliable():
    cases = []
    G = grid_graph((4, 4))
    cases.append(("grid4x4", G, baker_modulator(G, 4, "0_0")))
    P = Graph(range(10), [(i, i + 1) for i in range(9)])
    cases.append(("path10", P, baker_modulator(P, 3, "0")))
    S = Graph(["c"] + [str(i) for i in range(6)], [("c", str(i)) for i in range(6)])
    cases.append(("star6", S, baker_modulator(S, 2, "c")))
    ok, parts = True, []
    for name, G, pi in cases:
        A = graph_structure(G.vertices, G.edges)
        res = fragile_to_pliable(A, pi)
        floor = 1 - A.signature.max_arity * pi.thinness
        good = (overcast_verify(res.omega, A, res.B).ok
                and overcast_verify(res.omega_back, res.B, rescale(A, res.loss_factor)).ok
                and min(res.survival.values()) >= floor)
        ok &= good
        parts.append(f"{name}: min survival {min(res.survival.values())} >= {floor}")
    return ok, "; ".join(parts)


def c09_rounding():
    rng = random.Random(9)
    good = 0
    for _ in range(100):
        d, n = rng.randint(1, 4), rng.randint(1, 50)
        eps = rng.choice([Fraction(1, 2), Fraction(1, 4)])
        vs = [[Fraction(rng.randint(0, 1000), rng.randint(1, 50)) for _ in range(d)] for _ in range(n)]
        res = round_vectors(vs, eps)
        errs_ok = all(
            sum(abs(v[i] - w[i]) for v, w in zip(vs, res.vectors)) <= eps * sum(v[i] for v in vs)
            for i in range(d))
        good += errs_ok and res.classes <= class_bound(d, eps)
    return good == 100, f"{good}/100 within error and class bounds"


def c10_pack_round_trip():
    rng = random.Random(10)
    sig = Signature((("e", 2), ("u", 1), ("t", 3)))
    good = 0
    for _ in range(50):
        A = random_structure(rng, rng.randint(2, 5), sig=sig, density=0.3)
        v = rng.choice(A.domain)
        good += unpack_at(pack(A, v), v, A) == A
    return good == 50, f"{good}/50 identical"


def c11_counting_extension():
    G = gnp(12, Fraction(1, 2), seed=11)
    P = Partition([[str(i) for i in range(4 * j, 4 * j + 4)] for j in range(3)])
    F = [(0, 1), (1, 2), (0, 2)]
    ok, parts = True, []
    for Fs in ([(0, 1)], [(0, 1), (1, 2)], F):
        rep = counting_check(G, P, Fs)
        ok &= rep.contained
        parts.append(f"|F|={len(Fs)} total={rep.total} window={rep.predicted}+-{rep.halfwidth}")
    for ab in F:
        rep = extension_check(G, P, F, ab)
        ok &= rep.within_bound
        parts.append(f"ext{ab}: {len(rep.exceptions)} <= {rep.bound}")
    return ok, "; ".join(parts)


def c12_bucketing():
    cases = [("path60", Graph(range(61), [(i, i + 1) for i in range(60)]), path_cutter),
             ("path25", Graph(range(26), [(i, i + 1) for i in range(25)]), path_cutter),
             ("grid6x6", grid_graph((6, 6)), grid_slab_cutter),
             ("grid4x5", grid_graph((4, 5)), grid_slab_cutter)]
    ok, parts = True, []
    for name, G, cutter in cases:
        for eps in (Fraction(1, 2), Fraction(1, 4)):
            w = {e: Fraction(1, 2 ** (i % 17)) for i, e in enumerate(G.edges)}
            res = bucket_edge_weights(G, w, cutter, eps)
            cc = parameter(G.remove_edges(res.removed), "cc")[0]
            good = res.removed_weight <= eps * res.total_weight and cc == res.max_component <= res.cc_bound
            ok &= good
            parts.append(f"{name}@{eps}: cc {cc}<={res.cc_bound}")
    return ok, "; ".join(parts)


def c13_gadget_completeness():
    good = 0
    for seed in range(20):
        k = 3 + seed % 2
        G, col, _ = planted_instance(7, k, Fraction(1, 3), seed)
        gd = hardness_gadget(G, col, seed)
        good += opt_bruteforce(gd.A, gd.B).value == comb(k, 2)
    return good == 20, f"{good}/20 reach C(k,2)"


def c14_probe():
    losses = [non_pliability_probe(tournament(5, seed), 2).loss for seed in range(10)]
    return all(x > 0 for x in losses), "losses " + ", ".join(str(x) for x in losses)


def c15_quotient_pipeline():
    ok, parts = True, []
    K6 = clique(6)
    cases = [("K6", K6, Partition([["v0", "v1"], ["v2", "v3"], ["v4", "v5"]]), 1)]
    for sizes in ((3, 3), (2, 2, 2)):
        groups, vid = [], 0
        for s in sizes:
            groups.append([str(vid + i) for i in range(s)])
            vid += s
        edges = [(u, v) for a in range(len(groups)) for b in range(a + 1, len(groups))
                 for u in groups[a] for v in groups[b]]
        cases.append((f"K{sizes}", graph_structure([v for g in groups for v in g], edges), Partition(groups),
                      Fraction(1, 2) if len(sizes) == 2 else 1))
    for name, G, P, eps0 in cases:
        res = quotient_overcast(G, P, eps0)
        good = (res.accepted and overcast_verify(res.forward, G, res.Q).ok
                and overcast_verify(res.backward, res.Q, rescale(G, res.factor)).ok)
        ok &= good
        parts.append(f"{name}: {'accepted' if good else 'FAILED'} factor {res.factor}")
    M = graph_structure([str(i) for i in range(6)], [("0", "1"), ("2", "3"), ("4", "5")])
    res = quotient_overcast(M, Partition([["0", "2", "4"], ["1", "3", "5"]]), Fraction(1, 2))
    good = not res.accepted and res.backward is None and bool(res.diagnosis)
    ok &= good
    parts.append(f"matching: {'rejected' if good else 'FAILED'} ({res.checks.get('reason')})")
    return ok, "; ".join(parts)


CRITERIA = [
    (1, "oracle equivalence", c01_oracle_equivalence, 60),
    (2, "SA sandwich on grids", c02_sa_sandwich, 300),
    (3, "SA level gap", c03_level_gap, 10),
    (4, "overcast dichotomy", c04_dichotomy, 300),
    (5, "clique overcasts", c05_clique_example, 120),
    (6, "bipartite and triangle-decomposed distance 0", c06_bipartite_and_triangles, 120),
    (7, "edit-distance overcast bound", c07_edit_bound, 120),
    (8, "fragile to pliable construction", c08_fragile_to_pliable, 120),
    (9, "vector rounding", c09_rounding, 60),
    (10, "pack/unpack round trip", c10_pack_round_trip, 10),
    (11, "counting and extension windows", c11_counting_extension, 300),
    (12, "edge-weight bucketing", c12_bucketing, 60),
    (13, "hardness gadget completeness", c13_gadget_completeness, 120),
    (14, "non-pliability probe", c14_probe, 180),
    (15, "quotient overcast pipeline", c15_quotient_pipeline, 120),
]


def run_criterion(fn, limit):
    start = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # report, then fail
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    elapsed = time.perf_counter() - start
    return ok and elapsed < limit, detail, elapsed


@pytest.mark.parametrize("num,name,fn,limit", CRITERIA, ids=[f"c{c[0]:02d}" for c in CRITERIA])
def test_criterion(num, name, fn, limit, capsys):
    ok, detail, elapsed = run_criterion(fn, limit)
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} [{num:2d}] {name} ({elapsed:.2f}s / {limit}s): {detail}")
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for num, name, fn, limit in CRITERIA:
        ok, detail, elapsed = run_criterion(fn, limit)
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'} [{num:2d}] {name} ({elapsed:.2f}s / {limit}s): {detail}", flush=True)
    sys.exit(1 if failed else 0)
