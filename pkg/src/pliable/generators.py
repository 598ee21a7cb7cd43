"""Seeded instance generators, the clique-coloring hardness gadget and a small non-pliability probe."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .errors import CapExceeded, InvalidInput
from .graphs import Graph, grid_graph, max_component_size
from .rationals import as_rational, fmt
from .structures import GRAPH_SIGNATURE, ValuedStructure, gaifman, graph_structure, img, val


def _rng(seed) -> random.Random:
    return random.Random(int(seed))


def _coin(rng: random.Random, p: Fraction) -> bool:
    """Exact Bernoulli(p) for rational p."""
    return rng.randrange(p.denominator) < p.numerator


def grid(*dims: int) -> Graph:
    return grid_graph(dims)


def clique(n: int) -> Graph:
    return Graph(range(n), itertools.combinations(range(n), 2))


def path(n: int) -> Graph:
    return Graph(range(n), [(i, i + 1) for i in range(n - 1)])


def gnp(n: int, p, seed: int = 0) -> Graph:
    p = as_rational(p)
    if not 0 <= p <= 1:
        raise InvalidInput("p must lie in [0, 1]")
    rng = _rng(seed)
    return Graph(range(n), [e for e in itertools.combinations(range(n), 2) if _coin(rng, p)])


def bipartite(a: int, b: int, density, seed: int = 0) -> Graph:
    """Random bipartite graph with sides L0.. and R0..; each cross pair present with prob density."""
    p = as_rational(density)
    if not 0 <= p <= 1:
        raise InvalidInput("density must lie in [0, 1]")
    rng = _rng(seed)
    left, right = [f"L{i}" for i in range(a)], [f"R{j}" for j in range(b)]
    return Graph(left + right, [(u, v) for u in left for v in right if _coin(rng, p)])


def tournament(n: int, seed: int = 0) -> ValuedStructure:
    """Random orientation of K_n: one ordered tuple per pair."""
    rng = _rng(seed)
    ids = [str(i) for i in range(n)]
    arcs = {}
    for u, v in itertools.combinations(ids, 2):
        arcs[(u, v) if rng.random() < 0.5 else (v, u)] = Fraction(1)
    return ValuedStructure(GRAPH_SIGNATURE, ids, {"e": arcs})


def triangle_glued(base: Graph) -> Graph:
    """Add a new vertex t<u>-<v> adjacent to both ends of every edge uv of the base."""
    verts = list(base.vertices)
    edges = list(base.edges)
    for u, v in base.edges:
        t = f"t{u}-{v}"
        verts.append(t)
        edges += [(u, t), (v, t)]
    return Graph(verts, edges)


def gen(kind: str, seed: int = 0, **params):
    """Dispatch by name; graphs come back as Graph, tournaments as directed structures."""
    if kind == "grid":
        return grid(*params.get("dims", [params.get("n", 3)] * params.get("d", 2)))
    if kind == "clique":
        return clique(params["n"])
    if kind == "path":
        return path(params["n"])
    if kind == "gnp":
        return gnp(params["n"], params.get("p", Fraction(1, 2)), seed)
    if kind == "bipartite":
        return bipartite(params["a"], params["b"], params.get("density", Fraction(1, 2)), seed)
    if kind == "tournament":
        return tournament(params["n"], seed)
    if kind == "triangle_glued":
        base = params.get("base")
        if base is None:
            base = connected_bipartite(params.get("a", 2), params.get("b", 2), params.get("density", Fraction(1, 2)), seed)
        return triangle_glued(base)
    raise InvalidInput(f"unknown generator {kind!r}")


def connected_bipartite(a: int, b: int, density, seed: int = 0) -> Graph:
    """Bipartite graph with a random spanning tree plus random extra cross edges."""
    p = as_rational(density)
    rng = _rng(seed)
    left, right = [f"L{i}" for i in range(a)], [f"R{j}" for j in range(b)]
    if not left or not right:
        raise InvalidInput("both sides must be nonempty")
    edges = set()
    placed_l, placed_r = [left[0]], []
    rest = [(v, "R") for v in right] + [(v, "L") for v in left[1:]]
    rng.shuffle(rest)
    rest.sort(key=lambda t: t[1] == "L" and not placed_r)
    pending = list(rest)
    while pending:
        for i, (v, side) in enumerate(pending):
            pool = placed_l if side == "R" else placed_r
            if pool:
                edges.add((rng.choice(pool), v) if side == "R" else (v, rng.choice(pool)))
                (placed_r if side == "R" else placed_l).append(v)
                pending.pop(i)
                break
    for u in left:
        for v in right:
            if (u, v) not in edges and _coin(rng, p):
                edges.add((u, v))
    return Graph(left + right, sorted(edges))


def to_structure(G: Graph) -> ValuedStructure:
    return graph_structure(G.vertices, G.edges, {e: G.weight(*e) for e in G.edges})


# hardness gadget


@dataclass
class Gadget:
    A: ValuedStructure  # orientation of K_k on "1".."k"
    B: ValuedStructure  # directed structure on V(G)
    k: int


def hardness_gadget(G: Graph, coloring: Mapping, seed: int = 0) -> Gadget:
    """A = seeded random orientation of K_k; B keeps arc (u,v) of an edge uv when (c(u), c(v)) is an arc of A."""
    c = {str(v): int(coloring[v]) for v in coloring}
    if set(c) != set(G.vertices):
        raise InvalidInput("coloring must cover every vertex")
    k = max(c.values(), default=0)
    if k < 1 or min(c.values()) < 1:
        raise InvalidInput("colors must be 1..k")
    for u, v in G.edges:
        if c[u] == c[v]:
            raise InvalidInput(f"improper coloring at edge {u}-{v}")
    T = tournament(k, seed)
    A = ValuedStructure(GRAPH_SIGNATURE, [str(i) for i in range(1, k + 1)],
                        {"e": {(str(int(a) + 1), str(int(b) + 1)): 1 for a, b in T.table("e")}})
    arcs = {}
    for u, v in G.edges:
        for x, y in ((u, v), (v, u)):
            if A.value("e", (str(c[x]), str(c[y]))):
                arcs[(x, y)] = Fraction(1)
    return Gadget(A, ValuedStructure(GRAPH_SIGNATURE, G.vertices, {"e": arcs}), k)


def planted_instance(n: int, k: int, p, seed: int = 0) -> tuple[Graph, dict[str, int], list[str]]:
    """Random properly k-colored graph on n vertices with a planted rainbow k-clique."""
    if n < k or k < 1:
        raise InvalidInput("need n >= k >= 1")
    p = as_rational(p)
    rng = _rng(seed)
    ids = [str(i) for i in range(n)]
    colors = list(range(1, k + 1)) + [rng.randint(1, k) for _ in range(n - k)]
    rng.shuffle(colors)
    col = dict(zip(ids, colors))
    planted = [next(v for v in ids if col[v] == i) for i in range(1, k + 1)]
    edges = {tuple(sorted(e, key=int)) for e in itertools.combinations(planted, 2)}
    for u, v in itertools.combinations(ids, 2):
        if col[u] != col[v] and (u, v) not in edges and _coin(rng, p):
            edges.add((u, v))
    return Graph(ids, sorted(edges, key=lambda e: (int(e[0]), int(e[1])))), col, planted


# non-pliability probe


@dataclass
class ProbeReport:
    best_value: Fraction
    identity_value: Fraction
    loss: Fraction
    best_map: dict[str, str] | None
    maps_checked: int
    exceeds_eps: bool

    def to_json(self) -> dict:
        return {"best_value": fmt(self.best_value), "identity_value": fmt(self.identity_value),
                "loss": fmt(self.loss), "best_map": self.best_map, "maps_checked": self.maps_checked,
                "loss_at_least_eps": self.exceeds_eps}


def non_pliability_probe(A: ValuedStructure, k: int, eps=0, cap: int = 10**6) -> ProbeReport:
    """Best val(A, A, g) over self-maps whose image structure has components of <= k elements."""
    eps = as_rational(eps)
    n = len(A.domain)
    if n ** n > cap:
        raise CapExceeded(f"{n}^{n} self-maps exceed the cap {cap}")
    ident = val(A, A, {a: a for a in A.domain})
    best, best_map, checked = Fraction(0), None, 0
    for t in itertools.product(A.domain, repeat=n):
        g = dict(zip(A.domain, t))
        checked += 1
        v = val(A, A, g)
        if best_map is not None and v <= best:
            continue
        if max_component_size(gaifman(img(g, A, A))) <= k:
            best, best_map = v, g
    loss = 1 - best / ident if ident else Fraction(0)
    return ProbeReport(best, ident, loss, best_map, checked, loss >= eps and loss > 0)
