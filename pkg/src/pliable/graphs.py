"""Plain graph utilities: components, layers, tree decompositions, treedepth, degeneracy, girth."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

from .errors import CapExceeded, InvalidInput
from .rationals import as_rational, fmt

TW_EXACT_CAP = 12
TD_EXACT_CAP = 10


def _edge(u, v):
    return (u, v) if u <= v else (v, u)


class Graph:
    """Simple undirected graph with string vertex ids and optional rational weights."""

    def __init__(self, vertices: Iterable, edges: Iterable = (), vertex_weights: Mapping | None = None,
                 edge_weights: Mapping | None = None):
        self.vertices = tuple(str(v) for v in vertices)
        if len(set(self.vertices)) != len(self.vertices):
            raise InvalidInput("duplicate vertices")
        self.adj: dict[str, set[str]] = {v: set() for v in self.vertices}
        self._edges: list[tuple[str, str]] = []
        for e in edges:
            u, v = (str(a) for a in e)
            if u not in self.adj or v not in self.adj:
                raise InvalidInput(f"edge {u}-{v} references a missing vertex")
            if u == v:
                raise InvalidInput("loops are not allowed")
            if v in self.adj[u]:
                raise InvalidInput(f"duplicate edge {u}-{v}")
            self.adj[u].add(v)
            self.adj[v].add(u)
            self._edges.append((u, v))
        self.vertex_weights = {str(k): as_rational(w) for k, w in (vertex_weights or {}).items()}
        self.edge_weights: dict[tuple[str, str], Fraction] = {}
        for k, w in (edge_weights or {}).items():
            u, v = (str(a) for a in k)
            self.edge_weights[_edge(u, v)] = as_rational(w)

    @property
    def edges(self) -> list[tuple[str, str]]:
        return list(self._edges)

    def n(self) -> int:
        return len(self.vertices)

    def m(self) -> int:
        return len(self._edges)

    def has_edge(self, u, v) -> bool:
        return v in self.adj.get(u, ())

    def degree(self, v) -> int:
        return len(self.adj[v])

    def max_degree(self) -> int:
        return max((len(s) for s in self.adj.values()), default=0)

    def weight(self, u, v) -> Fraction:
        return self.edge_weights.get(_edge(u, v), Fraction(1))

    def subgraph(self, keep: Iterable) -> "Graph":
        keep = set(keep)
        vs = [v for v in self.vertices if v in keep]
        es = [e for e in self._edges if e[0] in keep and e[1] in keep]
        ew = {e: self.edge_weights[_edge(*e)] for e in es if _edge(*e) in self.edge_weights}
        vw = {v: w for v, w in self.vertex_weights.items() if v in keep}
        return Graph(vs, es, vw, ew)

    def remove_vertices(self, X: Iterable) -> "Graph":
        X = set(X)
        return self.subgraph(v for v in self.vertices if v not in X)

    def remove_edges(self, F: Iterable) -> "Graph":
        F = {_edge(*e) for e in F}
        es = [e for e in self._edges if _edge(*e) not in F]
        ew = {_edge(*e): self.edge_weights[_edge(*e)] for e in es if _edge(*e) in self.edge_weights}
        return Graph(self.vertices, es, self.vertex_weights, ew)

    def __repr__(self):
        return f"Graph(n={self.n()}, m={self.m()})"

    def to_json(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "edges": [list(e) for e in self._edges],
            "vertex_weights": {k: fmt(w) for k, w in sorted(self.vertex_weights.items())},
            "edge_weights": {f"{u},{v}": fmt(w) for (u, v), w in sorted(self.edge_weights.items())},
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Graph":
        try:
            ew = {}
            for k, w in data.get("edge_weights", {}).items():
                u, v = k.split(",") if isinstance(k, str) else k
                ew[(u, v)] = w
            return cls(data["vertices"], data.get("edges", []), data.get("vertex_weights", {}), ew)
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed graph JSON: {exc}") from exc

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def components(G: Graph) -> list[Graph]:
    seen: set[str] = set()
    out = []
    for s in G.vertices:
        if s in seen:
            continue
        comp = {s}
        queue = deque([s])
        seen.add(s)
        while queue:
            u = queue.popleft()
            for w in G.adj[u]:
                if w not in seen:
                    seen.add(w)
                    comp.add(w)
                    queue.append(w)
        out.append(G.subgraph(comp))
    return out


def bfs_layers(G: Graph, root=None) -> list[set[str]]:
    """Distance layers from root; a disconnected graph restarts from the first unseen vertex."""
    if not G.vertices:
        return []
    dist: dict[str, int] = {}
    starts = [str(root)] if root is not None else []
    starts += [v for v in G.vertices]
    for s in starts:
        if s in dist:
            continue
        if s not in G.adj:
            raise InvalidInput(f"root {s!r} not in graph")
        dist[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for w in G.adj[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    queue.append(w)
    layers: list[set[str]] = [set() for _ in range(max(dist.values()) + 1)]
    for v, d in dist.items():
        layers[d].add(v)
    return layers


# tree decompositions


@dataclass
class TreeDecomposition:
    bags: list[frozenset]
    tree: list[tuple[int, int]] = field(default_factory=list)

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=0) - 1

    def neighbors(self) -> dict[int, list[int]]:
        nb: dict[int, list[int]] = {i: [] for i in range(len(self.bags))}
        for i, j in self.tree:
            nb[i].append(j)
            nb[j].append(i)
        return nb

    def problems(self, G: Graph) -> list[str]:
        """Violated validity conditions; empty when the decomposition is valid for G."""
        out = []
        k = len(self.bags)
        if k == 0:
            return ["no bags"] if G.vertices else []
        nb = self.neighbors()
        # tree shape: connected and acyclic
        if len(self.tree) != k - 1:
            out.append("bag graph is not a tree (edge count)")
        seen = {0}
        stack = [0]
        while stack:
            i = stack.pop()
            for j in nb[i]:
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        if len(seen) != k:
            out.append("bag graph is disconnected")
        covered = set().union(*self.bags)
        for v in G.vertices:
            if v not in covered:
                out.append(f"vertex {v} uncovered")
        for u, v in G.edges:
            if not any(u in b and v in b for b in self.bags):
                out.append(f"edge {u}-{v} in no bag")
        for v in G.vertices:
            idx = {i for i, b in enumerate(self.bags) if v in b}
            if not idx:
                continue
            start = next(iter(idx))
            reach = {start}
            stack = [start]
            while stack:
                i = stack.pop()
                for j in nb[i]:
                    if j in idx and j not in reach:
                        reach.add(j)
                        stack.append(j)
            if reach != idx:
                out.append(f"bags of {v} not connected")
        return out

    def is_valid(self, G: Graph) -> bool:
        return not self.problems(G)


def decomposition_from_order(G: Graph, order: list[str]) -> TreeDecomposition:
    """Tree decomposition induced by eliminating vertices in `order`."""
    if not G.vertices:
        return TreeDecomposition([frozenset()], [])
    pos = {v: i for i, v in enumerate(order)}
    adj = {v: set(G.adj[v]) for v in G.vertices}
    bags = []
    later_nbrs = []
    for v in order:
        nb = adj[v]
        bags.append(frozenset(nb | {v}))
        later_nbrs.append(nb)
        for a in nb:
            adj[a] |= nb - {a}
            adj[a].discard(v)
        del adj[v]
    tree = []
    roots = []
    for i, v in enumerate(order):
        nb = later_nbrs[i]
        if nb:
            j = min(pos[a] for a in nb)
            tree.append((i, j))
        else:
            roots.append(i)
    # link the roots of separate components into one tree
    for a, b in zip(roots, roots[1:]):
        tree.append((a, b))
    return TreeDecomposition(bags, tree)


def _greedy_order(G: Graph, score) -> list[str]:
    adj = {v: set(G.adj[v]) for v in G.vertices}
    rank = {v: i for i, v in enumerate(G.vertices)}
    order = []
    while adj:
        v = min(adj, key=lambda u: (score(adj, u), rank[u]))
        nb = adj[v]
        for a in nb:
            adj[a] |= nb - {a}
            adj[a].discard(v)
        del adj[v]
        order.append(v)
    return order


def _fill(adj, v) -> int:
    nb = list(adj[v])
    return sum(1 for i in range(len(nb)) for j in range(i + 1, len(nb)) if nb[j] not in adj[nb[i]])


def min_fill_order(G: Graph) -> list[str]:
    return _greedy_order(G, _fill)


def min_degree_order(G: Graph) -> list[str]:
    return _greedy_order(G, lambda adj, v: len(adj[v]))


def exact_tw_order(G: Graph, cap: int = TW_EXACT_CAP) -> tuple[int, list[str]]:
    """Minimum-width elimination order by dynamic programming over vertex subsets."""
    n = G.n()
    if n > cap:
        raise CapExceeded(f"exact treewidth capped at {cap} vertices (got {n})")
    if n == 0:
        return -1, []
    vs = list(G.vertices)
    idx = {v: i for i, v in enumerate(vs)}
    nbm = [0] * n
    for u, v in G.edges:
        nbm[idx[u]] |= 1 << idx[v]
        nbm[idx[v]] |= 1 << idx[u]

    def q(S: int, v: int) -> int:
        # vertices outside S+v reachable from v through S
        seen = 1 << v
        frontier = 1 << v
        out = 0
        while frontier:
            i = (frontier & -frontier).bit_length() - 1
            frontier &= frontier - 1
            nb = nbm[i] & ~seen
            seen |= nb
            inside = nb & S
            out |= nb & ~S
            frontier |= inside
        return bin(out).count("1")

    full = (1 << n) - 1
    best = {0: -1}
    choice = {}
    # iterate masks in increasing popcount order
    masks = sorted(range(1, full + 1), key=lambda m: bin(m).count("1"))
    for S in masks:
        b = None
        bv = -1
        rest = S
        while rest:
            v = (rest & -rest).bit_length() - 1
            rest &= rest - 1
            prev = S & ~(1 << v)
            val = max(best[prev], q(prev, v))
            if b is None or val < b:
                b, bv = val, v
        best[S] = b
        choice[S] = bv
    order = []
    S = full
    while S:
        v = choice[S]
        order.append(vs[v])
        S &= ~(1 << v)
    order.reverse()
    return best[full], order


def tree_decomposition(G: Graph, method: str = "min_fill") -> TreeDecomposition:
    if method == "exact":
        _, order = exact_tw_order(G)
    elif method == "min_fill":
        order = min_fill_order(G)
    elif method == "min_degree":
        order = min_degree_order(G)
    else:
        raise InvalidInput(f"unknown method {method!r}")
    return decomposition_from_order(G, order)


def best_decomposition(G: Graph) -> tuple[TreeDecomposition, bool]:
    """Exact decomposition when within the cap, else the better heuristic; flag says exact."""
    if G.n() <= TW_EXACT_CAP:
        return tree_decomposition(G, "exact"), True
    a = tree_decomposition(G, "min_fill")
    b = tree_decomposition(G, "min_degree")
    return (a if a.width <= b.width else b), False


# treedepth


def treedepth(G: Graph, cap: int = TD_EXACT_CAP) -> tuple[int, dict[str, str | None]]:
    """Exact treedepth and an elimination forest (parent map; roots map to None)."""
    n = G.n()
    if n > cap:
        raise CapExceeded(f"exact treedepth capped at {cap} vertices (got {n})")
    vs = list(G.vertices)
    idx = {v: i for i, v in enumerate(vs)}
    nbm = [0] * n
    for u, v in G.edges:
        nbm[idx[u]] |= 1 << idx[v]
        nbm[idx[v]] |= 1 << idx[u]

    def comps(S: int) -> list[int]:
        out = []
        rest = S
        while rest:
            start = rest & -rest
            comp = start
            frontier = start
            while frontier:
                i = (frontier & -frontier).bit_length() - 1
                frontier &= frontier - 1
                nb = nbm[i] & S & ~comp
                comp |= nb
                frontier |= nb
            out.append(comp)
            rest &= ~comp
        return out

    @lru_cache(maxsize=None)
    def td(S: int) -> tuple[int, int]:
        # returns (depth, chosen root) for connected S; root -1 when disconnected/empty
        if S == 0:
            return 0, -1
        cs = comps(S)
        if len(cs) > 1:
            return max(td(c)[0] for c in cs), -1
        if S & (S - 1) == 0:
            return 1, S.bit_length() - 1
        best, bv = None, -1
        rest = S
        while rest:
            v = (rest & -rest).bit_length() - 1
            rest &= rest - 1
            d = td(S & ~(1 << v))[0] + 1
            if best is None or d < best:
                best, bv = d, v
        return best, bv

    parent: dict[str, str | None] = {}

    def build(S: int, par):
        for c in comps(S):
            _, r = td(c)
            parent[vs[r]] = par
            build(c & ~(1 << r), vs[r])

    depth = td((1 << n) - 1)[0]
    build((1 << n) - 1, None)
    return depth, parent


def treedepth_reducing_vertex(G: Graph) -> str:
    """For connected G, a vertex v with td(G - v) = td(G) - 1."""
    depth, parent = treedepth(G)
    roots = [v for v, p in parent.items() if p is None]
    if len(roots) != 1:
        raise InvalidInput("graph is not connected")
    return roots[0]


def forest_depth(parent: Mapping[str, str | None]) -> int:
    def depth(v):
        d = 1
        while parent[v] is not None:
            v = parent[v]
            d += 1
        return d

    return max((depth(v) for v in parent), default=0)


def is_elimination_forest(G: Graph, parent: Mapping[str, str | None]) -> bool:
    """Every edge joins an ancestor-descendant pair."""
    def ancestors(v):
        out = set()
        while parent[v] is not None:
            v = parent[v]
            out.add(v)
        return out

    if set(parent) != set(G.vertices):
        return False
    return all(u in ancestors(v) or v in ancestors(u) for u, v in G.edges)


# degeneracy, girth, parameters


def degeneracy_order(G: Graph) -> tuple[int, list[str]]:
    adj = {v: set(G.adj[v]) for v in G.vertices}
    rank = {v: i for i, v in enumerate(G.vertices)}
    order = []
    D = 0
    while adj:
        v = min(adj, key=lambda u: (len(adj[u]), rank[u]))
        D = max(D, len(adj[v]))
        for a in adj[v]:
            adj[a].discard(v)
        del adj[v]
        order.append(v)
    return D, order


def degeneracy(G: Graph) -> int:
    return degeneracy_order(G)[0]


def degeneracy_orientation(G: Graph) -> list[tuple[str, str]]:
    """Arcs (tail, head); each vertex is the head of the edges still present when it is removed."""
    _, order = degeneracy_order(G)
    pos = {v: i for i, v in enumerate(order)}
    arcs = []
    for u, v in G.edges:
        # the earlier-removed endpoint receives the arc
        if pos[u] < pos[v]:
            arcs.append((v, u))
        else:
            arcs.append((u, v))
    return arcs


def max_in_degree(arcs: list[tuple[str, str]]) -> int:
    cnt: dict[str, int] = {}
    for _, h in arcs:
        cnt[h] = cnt.get(h, 0) + 1
    return max(cnt.values(), default=0)


def girth(G: Graph) -> float | int:
    best = float("inf")
    for s in G.vertices:
        dist = {s: 0}
        par = {s: None}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for w in G.adj[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    par[w] = u
                    queue.append(w)
                elif par[u] != w:
                    best = min(best, dist[u] + dist[w] + 1)
    return best


def max_component_size(G: Graph) -> int:
    return max((c.n() for c in components(G)), default=0)


def parameter(G: Graph, which: str) -> tuple[int, bool]:
    """(value, exact) for which in {size, cc, tw, td}; inexact values are upper bounds."""
    if which == "size":
        return G.n(), True
    if which == "cc":
        return max_component_size(G), True
    if which == "tw":
        if G.n() == 0:
            return -1, True
        worst, exact = -1, True
        for C in components(G):
            T, ex = best_decomposition(C)
            worst = max(worst, T.width)
            exact = exact and ex
        return worst, exact
    if which == "td":
        worst, exact = 0, True
        for C in components(G):
            if C.n() <= TD_EXACT_CAP:
                worst = max(worst, treedepth(C)[0])
            else:
                # depth of a DFS tree is a valid elimination forest bound
                worst = max(worst, _dfs_depth(C))
                exact = False
        return worst, exact
    raise InvalidInput(f"unknown parameter {which!r}")


def _dfs_depth(G: Graph) -> int:
    """Depth of a depth-first search tree (non-tree edges join ancestor pairs)."""
    root = G.vertices[0]
    depth = {root: 1}
    stack = [(root, iter(sorted(G.adj[root])))]
    while stack:
        v, it = stack[-1]
        w = next(it, None)
        if w is None:
            stack.pop()
        elif w not in depth:
            depth[w] = depth[v] + 1
            stack.append((w, iter(sorted(G.adj[w]))))
    return max(depth.values())


def grid_graph(dims: Iterable[int]) -> Graph:
    """Grid P_{n1} x ... x P_{nd}; vertex ids join coordinates with '_'."""
    import itertools

    dims = [int(n) for n in dims]
    if not dims or any(n < 1 for n in dims):
        raise InvalidInput("grid sides must be positive")
    pts = list(itertools.product(*(range(n) for n in dims)))
    name = lambda p: "_".join(map(str, p))
    edges = []
    for p in pts:
        for a in range(len(dims)):
            if p[a] + 1 < dims[a]:
                q = p[:a] + (p[a] + 1,) + p[a + 1:]
                edges.append((name(p), name(q)))
    return Graph([name(p) for p in pts], edges)


def grid_coords(v: str) -> tuple[int, ...]:
    return tuple(int(c) for c in v.split("_"))
