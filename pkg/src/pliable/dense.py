"""Dense graphs: partitions, quotients, homogeneity defects, clique overcasts, counting and
extension checks, and the quotient overcast with its verification path."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, lcm, perm, prod
from typing import Iterable, Sequence

from .errors import CapExceeded, InfiniteDistance, InvalidInput
from .graphs import Graph
from .overcast import Overcast, compose, edit_overcast, overcast_verify
from .rationals import as_rational, fmt, sqrt_upper, surrogate_factor
from .structures import GRAPH_SIGNATURE, ValuedStructure, edit_distance, graph_structure, rescale

EXACT_SIDE_CAP = 16
PMAP_CAP = 10**6
CLIQUE_MAP_CAP = 10**5


def as_graph_structure(G) -> ValuedStructure:
    """Accept a Graph (edge weights default to 1) or a structure over the graph signature."""
    if isinstance(G, ValuedStructure):
        if G.signature != GRAPH_SIGNATURE:
            raise InvalidInput("expected a structure over the graph signature")
        return G
    if isinstance(G, Graph):
        return graph_structure(G.vertices, G.edges, {e: G.weight(*e) for e in G.edges})
    raise InvalidInput("expected a Graph or a graph structure")


class Partition:
    def __init__(self, parts: Iterable[Iterable]):
        self.parts: list[list[str]] = [[str(v) for v in p] for p in parts]
        if any(not p for p in self.parts):
            raise InvalidInput("empty part")
        flat = [v for p in self.parts for v in p]
        if len(set(flat)) != len(flat):
            raise InvalidInput("parts overlap")

    @property
    def k(self) -> int:
        return len(self.parts)

    def check(self, G: ValuedStructure):
        if sorted(v for p in self.parts for v in p) != sorted(G.domain):
            raise InvalidInput("partition does not cover the vertex set exactly")

    def is_balanced(self) -> bool:
        sizes = [len(p) for p in self.parts]
        return max(sizes) - min(sizes) <= 1

    def part_of(self) -> dict[str, int]:
        return {v: i for i, p in enumerate(self.parts) for v in p}

    def to_json(self) -> dict:
        return {"parts": self.parts}

    @classmethod
    def from_json(cls, data) -> "Partition":
        try:
            return cls(data["parts"])
        except (KeyError, TypeError) as exc:
            raise InvalidInput(f"malformed partition JSON: {exc}") from exc

    def __repr__(self):
        return f"Partition(k={self.k}, sizes={[len(p) for p in self.parts]})"


def _w(G: ValuedStructure, u: str, v: str) -> Fraction:
    return G.value("e", (u, v))


def pair_weight(G: ValuedStructure, V1: Sequence[str], V2: Sequence[str]) -> Fraction:
    """w_G(V1, V2): total weight of ordered pairs in V1 x V2."""
    tab = G.table("e")
    s2 = set(V2)
    return sum((w for (u, v), w in tab.items() if v in s2 and u in set(V1)), Fraction(0))


def quotient(G, P: Partition) -> ValuedStructure:
    """Weighted graph on parts "0".."k-1" with w(i, j) = w_G(V_i, V_j), loops included."""
    G = as_graph_structure(G)
    P.check(G)
    where = P.part_of()
    acc: dict[tuple, Fraction] = {}
    for (u, v), w in G.table("e").items():
        key = (str(where[u]), str(where[v]))
        acc[key] = acc.get(key, Fraction(0)) + w
    return ValuedStructure(GRAPH_SIGNATURE, [str(i) for i in range(P.k)], {"e": acc})


def densities(G, P: Partition) -> list[list[Fraction]]:
    G = as_graph_structure(G)
    Q = quotient(G, P)
    return [[Q.value("e", (str(i), str(j))) / (len(P.parts[i]) * len(P.parts[j])) for j in range(P.k)]
            for i in range(P.k)]


@dataclass
class HomogeneityReport:
    density: Fraction
    defect: Fraction
    exact: bool  # False: sampled, a lower bound on the true defect
    witness: tuple[tuple[str, ...], tuple[str, ...]] | None = None

    def to_json(self) -> dict:
        return {"density": fmt(self.density), "defect": fmt(self.defect), "exact": self.exact,
                "witness": [list(self.witness[0]), list(self.witness[1])] if self.witness else None}


def homogeneity_defect(G, V1: Sequence, V2: Sequence, mode: str = "exact", samples: int = 2000,
                       seed: int = 0) -> HomogeneityReport:
    """max over W1 in V1, W2 in V2 of |w(W1,W2) - d|W1||W2|| / (|V1||V2|).

    Exact mode enumerates subsets of the smaller side; for a fixed W1 the best W2 takes
    every vertex whose contribution has the right sign, so the maximum is exact.
    """
    G = as_graph_structure(G)
    V1, V2 = [str(v) for v in V1], [str(v) for v in V2]
    if not V1 or not V2:
        raise InvalidInput("empty side")
    n1, n2 = len(V1), len(V2)
    total = pair_weight(G, V1, V2)
    d = total / (n1 * n2)
    scale = lcm(*[w.denominator for w in G.table("e").values()], 1)
    # integer matrix M[x][y] = n1*n2*scale*w(x,y); target d*|W1||W2| scaled alike
    W = [[int(_w(G, x, y) * scale) * n1 * n2 for y in V2] for x in V1]
    D = int(total * scale)  # = d*n1*n2*scale
    swapped = False
    if n1 > n2:
        W = [list(col) for col in zip(*W)]
        V1, V2, n1, n2, swapped = V2, V1, n2, n1, True
    if mode == "exact":
        if n1 > EXACT_SIDE_CAP:
            raise CapExceeded(f"exact homogeneity needs a side of at most {EXACT_SIDE_CAP} vertices")
        best, arg = 0, None
        col = [0] * n2
        for mask in range(1 << n1):
            size = bin(mask).count("1")
            for j in range(n2):
                col[j] = sum(W[i][j] for i in range(n1) if mask >> i & 1) - D * size
            pos = sum(c for c in col if c > 0)
            neg = -sum(c for c in col if c < 0)
            for val, sign in ((pos, 1), (neg, -1)):
                if val > best:
                    best = val
                    arg = (mask, sign, [c for c in col])
        witness = None
        if arg is not None:
            mask, sign, col = arg
            W1 = tuple(V1[i] for i in range(n1) if mask >> i & 1)
            W2 = tuple(V2[j] for j in range(n2) if col[j] * sign > 0)
            witness = (W2, W1) if swapped else (W1, W2)
        defect = Fraction(best, n1 * n2 * scale * n1 * n2)
        return HomogeneityReport(d, defect, True, witness)
    if mode == "sampled":
        rng = random.Random(seed)
        best, witness = 0, None
        for _ in range(samples):
            m1 = [rng.random() < 0.5 for _ in range(n1)]
            m2 = [rng.random() < 0.5 for _ in range(n2)]
            s = sum(W[i][j] for i in range(n1) if m1[i] for j in range(n2) if m2[j]) - D * sum(m1) * sum(m2)
            if abs(s) > best:
                best = abs(s)
                W1 = tuple(v for v, b in zip(V1, m1) if b)
                W2 = tuple(v for v, b in zip(V2, m2) if b)
                witness = (W2, W1) if swapped else (W1, W2)
        return HomogeneityReport(d, Fraction(best, n1 * n2 * scale * n1 * n2), False, witness)
    raise InvalidInput(f"unknown mode {mode!r}")


def partition_defect(G, P: Partition, pairs: Iterable[tuple[int, int]] | None = None,
                     mode: str = "exact") -> tuple[Fraction, bool]:
    """Largest homogeneity defect over the given pairs of parts (default: all i < j)."""
    G = as_graph_structure(G)
    pairs = list(itertools.combinations(range(P.k), 2)) if pairs is None else list(pairs)
    worst, exact = Fraction(0), True
    for i, j in pairs:
        rep = homogeneity_defect(G, P.parts[i], P.parts[j], mode)
        worst = max(worst, rep.defect)
        exact = exact and rep.exact
    return worst, exact


# clique overcasts


@dataclass
class CliqueOvercasts:
    lam: Fraction
    forward: Overcast  # K_n -> (1-1/k) lam K_k
    backward: Overcast  # lam K_k -> (1-1/n) K_n
    forward_factor: Fraction
    backward_factor: Fraction
    Kn: ValuedStructure
    Kk: ValuedStructure  # lam * K_k


def clique(n: int, prefix: str = "v") -> ValuedStructure:
    ids = [f"{prefix}{i}" for i in range(n)]
    return graph_structure(ids, itertools.combinations(ids, 2))


def clique_overcast(n: int, k: int, back: str = "function") -> CliqueOvercasts:
    """Uniform random functions K_n -> K_k and, back, uniform random functions K_k -> K_n.

    back="injection" uses uniform injections instead, which covers K_n fully (factor 1).
    """
    if n < 2 or k < 2:
        raise InvalidInput("need n, k >= 2")
    if k ** n > CLIQUE_MAP_CAP:
        raise CapExceeded(f"{k}^{n} maps exceed the cap")
    lam = Fraction(comb(n, 2), comb(k, 2))
    Kn, Kk = clique(n, "v"), rescale(clique(k, "c"), lam)
    p = Fraction(1, k ** n)
    fwd = Overcast((dict(zip(Kn.domain, t)), p) for t in itertools.product(Kk.domain, repeat=n))
    if back == "function":
        if n ** k > CLIQUE_MAP_CAP:
            raise CapExceeded(f"{n}^{k} maps exceed the cap")
        q = Fraction(1, n ** k)
        bwd = Overcast((dict(zip(Kk.domain, t)), q) for t in itertools.product(Kn.domain, repeat=k))
    elif back == "injection":
        if k > n or perm(n, k) > CLIQUE_MAP_CAP:
            raise CapExceeded("injection count exceeds the cap or k > n")
        q = Fraction(1, perm(n, k))
        bwd = Overcast((dict(zip(Kk.domain, t)), q) for t in itertools.permutations(Kn.domain, k))
    else:
        raise InvalidInput(f"unknown back mode {back!r}")
    ff = 1 - Fraction(1, k)
    bf = Fraction(1) if back == "injection" else 1 - Fraction(1, n)
    if not overcast_verify(fwd, Kn, rescale(Kk, ff)).ok or not overcast_verify(bwd, Kk, rescale(Kn, bf)).ok:
        raise AssertionError("internal error: clique overcasts failed verification")
    return CliqueOvercasts(lam, fwd, bwd, ff, bf, Kn, Kk)


# counting and extension


def _pmaps(P: Partition, cap: int):
    total = prod(len(p) for p in P.parts)
    if total > cap:
        raise CapExceeded(f"{total} partition maps exceed the cap {cap}")
    return itertools.product(*P.parts)


def _norm_pairs(F: Iterable, k: int) -> list[tuple[int, int]]:
    out = set()
    for a, b in F:
        a, b = int(a), int(b)
        if a == b or not (0 <= a < k and 0 <= b < k):
            raise InvalidInput(f"bad pair {a},{b}")
        out.add((min(a, b), max(a, b)))
    return sorted(out)


def hom_weight(G: ValuedStructure, F: Sequence[tuple[int, int]], g: Sequence[str]) -> Fraction:
    """hom_g(F, G) = product over ij in F of w_G(g(i), g(j))."""
    out = Fraction(1)
    for i, j in F:
        w = _w(G, g[i], g[j])
        if not w:
            return Fraction(0)
        out *= w
    return out


@dataclass
class CountingReport:
    total: Fraction
    predicted: Fraction  # (prod |V_i|)(prod d_ij)
    halfwidth: Fraction  # (prod |V_i|) eps |F|
    eps: Fraction
    eps_exact: bool

    @property
    def contained(self) -> bool:
        return abs(self.total - self.predicted) <= self.halfwidth

    def to_json(self) -> dict:
        return {"sum": fmt(self.total), "predicted": fmt(self.predicted), "halfwidth": fmt(self.halfwidth),
                "eps": fmt(self.eps), "contained": self.contained}


def counting_check(G, P: Partition, F: Iterable, cap: int = PMAP_CAP, eps=None) -> CountingReport:
    """Sum of hom_g(F, G) over partition maps against the counting window, eps = measured defect."""
    G = as_graph_structure(G)
    P.check(G)
    F = _norm_pairs(F, P.k)
    dens = densities(G, P)
    if eps is None:
        eps, exact = partition_defect(G, P, F) if F else (Fraction(0), True)
    else:
        eps, exact = as_rational(eps), True
    total = sum((hom_weight(G, F, g) for g in _pmaps(P, cap)), Fraction(0))
    size = prod(len(p) for p in P.parts)
    pred = size * prod((dens[i][j] for i, j in F), start=Fraction(1))
    return CountingReport(total, pred, size * eps * len(F), eps, exact)


@dataclass
class ExtensionReport:
    exceptions: list[tuple[str, str]]
    bound: Fraction  # 2k sqrt(eps) |V_a||V_b|
    eps: Fraction
    sqrt_eps: Fraction
    pinned: dict[tuple[str, str], Fraction] = field(default_factory=dict)

    @property
    def within_bound(self) -> bool:
        return len(self.exceptions) <= self.bound

    def to_json(self) -> dict:
        return {"exceptions": [list(e) for e in self.exceptions], "count": len(self.exceptions),
                "bound": fmt(self.bound), "eps": fmt(self.eps), "within_bound": self.within_bound}


def extension_check(G, P: Partition, F: Iterable, ab: tuple[int, int], cap: int = PMAP_CAP,
                    eps=None) -> ExtensionReport:
    """Pinned sums over maps with g(a)=x_a, g(b)=x_b against the extension window.

    Window: (prod_{i != a,b} |V_i|)(w(x_a,x_b) prod_{F - ab} d_ij +- sqrt(eps)|F|), with
    sqrt(eps) replaced by a rational upper bound.
    """
    G = as_graph_structure(G)
    P.check(G)
    F = _norm_pairs(F, P.k)
    a, b = int(ab[0]), int(ab[1])
    if (min(a, b), max(a, b)) not in F:
        raise InvalidInput("ab must belong to F")
    dens = densities(G, P)
    if eps is None:
        eps, _ = partition_defect(G, P, F)
    eps = as_rational(eps)
    se = sqrt_upper(eps)
    rest = [i for i in range(P.k) if i not in (a, b)]
    size_rest = prod((len(P.parts[i]) for i in rest), start=1)
    if size_rest * len(P.parts[a]) * len(P.parts[b]) > cap:
        raise CapExceeded("pinned enumeration exceeds the cap")
    other = prod((dens[i][j] for i, j in F if {i, j} != {a, b}), start=Fraction(1))
    exceptions, pinned = [], {}
    for xa in P.parts[a]:
        for xb in P.parts[b]:
            s = Fraction(0)
            for choice in itertools.product(*(P.parts[i] for i in rest)):
                g = [None] * P.k
                g[a], g[b] = xa, xb
                for i, x in zip(rest, choice):
                    g[i] = x
                s += hom_weight(G, F, g)
            pinned[(xa, xb)] = s
            centre = size_rest * _w(G, xa, xb) * other
            if abs(s - centre) > size_rest * se * len(F):
                exceptions.append((xa, xb))
    bound = 2 * P.k * se * len(P.parts[a]) * len(P.parts[b])
    return ExtensionReport(exceptions, bound, eps, se, pinned)


# quotient overcast


@dataclass
class QuotientResult:
    accepted: bool
    Q: ValuedStructure
    forward: Overcast  # G -> Q
    backward: Overcast | None  # Q -> factor * G (composite)
    G_pruned: ValuedStructure | None
    factor: Fraction | None
    checks: dict
    diagnosis: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"accepted": self.accepted, "quotient": self.Q.to_json(), "forward": self.forward.to_json(),
               "checks": {k: (fmt(v) if isinstance(v, Fraction) else v) for k, v in self.checks.items()},
               "diagnosis": self.diagnosis}
        if self.accepted:
            out["backward"] = self.backward.to_json()
            out["factor"] = fmt(self.factor)
            out["pruned"] = self.G_pruned.to_json()
        return out


def quotient_overcast(G, P: Partition, eps0, cap: int = PMAP_CAP) -> QuotientResult:
    """G -> G/P collapses each part; G/P -> G is built from weighted copies of F in G.

    F holds the pairs of parts with density >= 1/k. G' drops edges inside parts, between
    pairs outside F, of weight w with w^8 < eps, and those failing the extension window,
    where eps is the measured defect. The backward distribution takes each partition map
    g with probability hom_g(F, G)/N; it is composed with the edit overcast G' -> G.
    Acceptance requires N > 0, coverage of r(eps0/2) G', d_edit(G, G') <= eps0/2 and a
    verified composite factor of at least r(eps0); otherwise a diagnosis is returned.
    """
    G = as_graph_structure(G)
    P.check(G)
    eps0 = as_rational(eps0)
    Q = quotient(G, P)
    where = P.part_of()
    fwd = Overcast([({v: str(where[v]) for v in G.domain}, 1)])
    if not overcast_verify(fwd, G, Q).ok:
        raise AssertionError("internal error: collapse map failed verification")
    k = P.k
    dens = densities(G, P)
    F = [(i, j) for i, j in itertools.combinations(range(k), 2) if dens[i][j] >= Fraction(1, k)]
    eps, eps_exact = partition_defect(G, P) if k > 1 else (Fraction(0), True)
    checks: dict = {"k": k, "F": [list(e) for e in F], "eps_measured": eps, "eps_exact": eps_exact}

    def reject(reason: str, **diag) -> QuotientResult:
        checks["reason"] = reason
        return QuotientResult(False, Q, fwd, None, None, None, checks, diag)

    # prune
    drop = set()
    for (u, v), w in G.table("e").items():
        a, b = where[u], where[v]
        if a == b or (min(a, b), max(a, b)) not in F or w ** 8 < eps:
            drop.add((u, v))
    failures = []
    for a, b in F:
        rep = extension_check(G, P, F, (a, b), cap, eps)
        for xa, xb in rep.exceptions:
            failures.append((xa, xb))
            drop.add((xa, xb))
            drop.add((xb, xa))
    checks["extension_failures"] = len(failures)
    kept = {x: w for x, w in G.table("e").items() if x not in drop}
    Gp = ValuedStructure(GRAPH_SIGNATURE, G.domain, {"e": kept})
    try:
        de = edit_distance(G, Gp, {v: v for v in G.domain})
    except InfiniteDistance:
        return reject("pruned graph is empty (density hypothesis violated)", dense_pairs=len(F))
    checks["edit_distance"] = de
    N = sum((hom_weight(G, F, g) for g in _pmaps(P, cap)), Fraction(0))
    checks["N"] = N
    if N == 0:
        return reject("no weighted copy of F (N = 0)", dense_pairs=len(F), pruned_edges=len(drop) // 2)
    support = []
    for g in _pmaps(P, cap):
        h = hom_weight(G, F, g)
        if h:
            support.append(({str(i): g[i] for i in range(k)}, h / N))
    bwd = Overcast(support)
    rep = overcast_verify(bwd, Q, Gp)
    ratios = [rep.coverage.get((n, y), Fraction(0)) / w for n, y, w in Gp.positive()]
    t = min(ratios)
    checks["backward_factor"] = t
    half = surrogate_factor(eps0 / 2)
    if t < half:
        low = {f"{y[0]},{y[1]}": fmt(rep.coverage.get((n, y), Fraction(0)) / w)
               for n, y, w in Gp.positive() if rep.coverage.get((n, y), Fraction(0)) < half * w}
        return reject("backward distribution does not cover r(eps0/2) G'", coverage_ratio=low)
    if de > eps0 / 2:
        return reject("edit distance to the pruned graph exceeds eps0/2", edit_distance=fmt(de))
    om_edit, delta = edit_overcast(Gp, G, {v: v for v in G.domain}, collapse="derandomized")
    factor = t * (1 - delta)
    composite = compose(bwd, om_edit)
    if not overcast_verify(composite, Q, rescale(G, factor)).ok:
        raise AssertionError("internal error: composite overcast failed verification")
    checks["factor"] = factor
    if factor < surrogate_factor(eps0):
        return reject("certified factor below r(eps0)", factor=fmt(factor))
    return QuotientResult(True, Q, fwd, composite, Gp, factor, checks)


# heuristic partition search


def regularity_search(G, k: int, budget: int = 50, seed: int = 0, mode: str = "exact") -> tuple[Partition, Fraction]:
    """Local search over balanced k-partitions minimizing the largest pairwise defect."""
    G = as_graph_structure(G)
    n = len(G.domain)
    if not 1 <= k <= n:
        raise InvalidInput("need 1 <= k <= n")
    rng = random.Random(seed)

    def make(order):
        return Partition([order[i::k] for i in range(k)])

    def score(P):
        return partition_defect(G, P, mode=mode)[0] if k > 1 else Fraction(0)

    best_P = make(list(G.domain))
    best = score(best_P)
    for _ in range(budget):
        if best == 0:
            break
        order = list(G.domain)
        rng.shuffle(order)
        P = make(order)
        s = score(P)
        improved = True
        while improved and s > 0:
            improved = False
            for i, j in itertools.combinations(range(k), 2):
                for x in range(len(P.parts[i])):
                    for y in range(len(P.parts[j])):
                        parts = [list(p) for p in P.parts]
                        parts[i][x], parts[j][y] = parts[j][y], parts[i][x]
                        cand = Partition(parts)
                        cs = score(cand)
                        if cs < s:
                            P, s, improved = cand, cs, True
                            break
                    if improved:
                        break
                if improved:
                    break
        if s < best:
            best_P, best = P, s
    return best_P, best
