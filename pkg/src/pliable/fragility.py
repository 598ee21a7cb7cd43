"""Fractional modulators: layer and slab families, thinness, vertex/edge conversions,
the fragile-to-pliable construction, weight bucketing and extraction from overcasts."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil
from typing import Callable, Iterable, Mapping, Sequence

from .errors import InvalidInput, VerificationError
from .graphs import (Graph, _edge, bfs_layers, components, degeneracy_orientation, grid_coords,
                     grid_graph, parameter)
from .lp import LinearProgram, solve_exact
from .overcast import Overcast, overcast_verify
from .rationals import as_rational, fmt, surrogate_factor
from .structures import (Signature, ValuedStructure, disjoint_union, gaifman, rescale, union_tag)


class FractionalModulator:
    """Distribution over vertex sets (kind "vertex") or edge sets (kind "edge") of a graph.

    Each removal X is meant to leave a graph whose `parameter` is at most `bound`.
    """

    def __init__(self, graph: Graph, kind: str, support: Iterable[tuple[Iterable, object]],
                 parameter: str = "tw", bound: int | None = None):
        if kind not in ("vertex", "edge"):
            raise InvalidInput(f"unknown modulator kind {kind!r}")
        self.graph, self.kind, self.parameter, self.bound = graph, kind, parameter, bound
        merged: dict[frozenset, Fraction] = {}
        for X, p in support:
            p = as_rational(p)
            if p < 0:
                raise InvalidInput("negative probability")
            if p == 0:
                continue
            key = frozenset(self._element(x) for x in X)
            merged[key] = merged.get(key, Fraction(0)) + p
        if sum(merged.values()) != 1:
            raise InvalidInput(f"probabilities sum to {sum(merged.values())}, not 1")
        order = self._order()
        self.support: list[tuple[frozenset, Fraction]] = sorted(
            merged.items(), key=lambda kv: (len(kv[0]), sorted(order[x] for x in kv[0])))

    def _order(self) -> dict:
        if self.kind == "vertex":
            return {v: i for i, v in enumerate(self.graph.vertices)}
        return {_edge(u, v): i for i, (u, v) in enumerate(self.graph.edges)}

    def _element(self, x):
        if self.kind == "vertex":
            x = str(x)
            if x not in self.graph.adj:
                raise InvalidInput(f"vertex {x!r} not in graph")
            return x
        u, v = (str(a) for a in x)
        if not self.graph.has_edge(u, v):
            raise InvalidInput(f"edge {u}-{v} not in graph")
        return _edge(u, v)

    def marginals(self) -> dict:
        out = {x: Fraction(0) for x in self._order()}
        for X, p in self.support:
            for x in X:
                out[x] += p
        return out

    @property
    def thinness(self) -> Fraction:
        return max(self.marginals().values(), default=Fraction(0))

    def residual(self, X: frozenset) -> Graph:
        return self.graph.remove_vertices(X) if self.kind == "vertex" else self.graph.remove_edges(X)

    def residual_values(self) -> list[tuple[int, bool]]:
        return [parameter(self.residual(X), self.parameter) for X, _ in self.support]

    def verify(self) -> bool:
        """Every residual has a certified parameter value (exact or an upper bound) <= bound."""
        if self.bound is None:
            return True
        return all(v <= self.bound for v, _ in self.residual_values())

    def to_json(self) -> dict:
        def enc(x):
            return x if self.kind == "vertex" else list(x)

        return {
            "kind": self.kind,
            "parameter": self.parameter,
            "bound": self.bound,
            "thinness": fmt(self.thinness),
            "support": [{"set": [enc(x) for x in sorted(X, key=self._order().get)], "prob": fmt(p)}
                        for X, p in self.support],
        }

    @classmethod
    def from_json(cls, graph: Graph, data: Mapping) -> "FractionalModulator":
        try:
            return cls(graph, data["kind"], [(row["set"], row["prob"]) for row in data["support"]],
                       data.get("parameter", "tw"), data.get("bound"))
        except (KeyError, TypeError) as exc:
            raise InvalidInput(f"malformed modulator JSON: {exc}") from exc

    def __repr__(self):
        return f"FractionalModulator({self.kind}, support={len(self.support)}, thinness={self.thinness})"


def thinness(pi: FractionalModulator) -> Fraction:
    return pi.thinness


# layer and slab families


def baker_modulator(G: Graph, layers: int, root=None) -> FractionalModulator:
    """Uniform over the `layers` shifts, shift j removing BFS layers congruent to j.

    root may be a vertex or one vertex per component.
    """
    ell = int(layers)
    if ell < 2:
        raise InvalidInput("need at least 2 layers per period")
    comps = components(G)
    roots = [] if root is None else ([str(root)] if isinstance(root, (str, int)) else [str(r) for r in root])
    if not roots:
        if len(comps) > 1:
            raise InvalidInput("disconnected graph: give one root per component")
        roots = [G.vertices[0]] if G.vertices else []
    depth: dict[str, int] = {}
    for C in comps:
        rs = [r for r in roots if r in C.adj]
        if len(rs) != 1:
            raise InvalidInput("disconnected graph: give exactly one root per component")
        for d, layer in enumerate(bfs_layers(C, rs[0])):
            for v in layer:
                depth[v] = d
    shifts = [[v for v in G.vertices if depth[v] % ell == j] for j in range(ell)]
    return FractionalModulator(G, "vertex", [(X, Fraction(1, ell)) for X in shifts], "tw", 3 * ell)


def grid_modulator(d: int, n: int, layers: int, axes: Sequence[int] | None = None) -> FractionalModulator:
    """Slab removal on the d-dimensional n-grid: one uniform shift per axis in `axes`, combined.

    A vertex is removed when some chosen axis coordinate is congruent to that axis's shift.
    """
    if d not in (1, 2, 3):
        raise InvalidInput("grid dimension must be 1, 2 or 3")
    ell = int(layers)
    if ell < 2:
        raise InvalidInput("need at least 2 layers per period")
    axes = list(range(d)) if axes is None else sorted(set(int(a) for a in axes))
    if not axes or any(not 0 <= a < d for a in axes):
        raise InvalidInput("axes out of range")
    if len(axes) < d - 1:
        raise InvalidInput("slabs along fewer than d-1 axes do not bound treewidth")
    G = grid_graph([n] * d)
    coords = {v: grid_coords(v) for v in G.vertices}
    p = Fraction(1, ell ** len(axes))
    support = []
    for shift in itertools.product(range(ell), repeat=len(axes)):
        X = [v for v in G.vertices if any(coords[v][a] % ell == s for a, s in zip(axes, shift))]
        support.append((X, p))
    bound = ell ** (d - 1) if d > 1 else 0
    return FractionalModulator(G, "vertex", support, "tw", bound)


# duality between thin distributions and light sets


@dataclass
class ThinResult:
    """Either a thin distribution over the family or weights no member is light for."""

    value: Fraction  # least achievable max marginal
    distribution: list[tuple[frozenset, Fraction]] | None
    weights: dict[str, Fraction] | None


def thin_distribution(universe: Sequence, family: Sequence[Iterable], eps) -> ThinResult:
    """min t s.t. some distribution over `family` has every marginal <= t.

    When t* <= eps the distribution is returned; otherwise the dual weights w satisfy
    w(X) >= t* w(V) > eps w(V) for every X in the family.
    """
    eps = as_rational(eps)
    universe = [str(v) for v in universe]
    fam = [frozenset(str(v) for v in X) for X in family]
    if not fam:
        raise InvalidInput("empty family")
    lp = LinearProgram()
    cols = [lp.add_var(f"p{j}") for j in range(len(fam))]
    t = lp.add_var("t")
    for v in universe:
        c = {cols[j]: 1 for j, X in enumerate(fam) if v in X}
        c[t] = -1
        lp.add_constraint(c, "<=", 0)
    lp.add_constraint({c: 1 for c in cols}, "=", 1)
    lp.set_objective({t: 1}, "min")
    out = solve_exact(lp)
    if out.status != "optimal":
        raise VerificationError(f"thinness LP returned {out.status}")
    if out.value <= eps:
        dist = [(fam[j], out.primal[c]) for j, c in enumerate(cols) if out.primal[c] > 0]
        return ThinResult(out.value, dist, None)
    w = {v: abs(y) for v, y in zip(universe, out.dual[: len(universe)])}
    total = sum(w.values())
    if total == 0 or any(sum(w[v] for v in X if v in w) < out.value * total for X in fam):
        raise AssertionError("internal error: dual weights do not certify")
    return ThinResult(out.value, None, w)


def dual_check(G: Graph, family: Sequence[Iterable], eps, weights: Mapping) -> frozenset | None:
    """A member X of the family with w(X) <= eps*w(V), or None when every member is heavier."""
    eps = as_rational(eps)
    w = {str(v): as_rational(x) for v, x in weights.items()}
    total = sum(w.get(v, Fraction(0)) for v in G.vertices)
    best = None
    for X in family:
        X = frozenset(str(v) for v in X)
        wx = sum(w.get(v, Fraction(0)) for v in X)
        if wx <= eps * total and (best is None or wx < best[0]):
            best = (wx, X)
    return None if best is None else best[1]


# vertex <-> edge modulators


def edge_from_vertex(pi: FractionalModulator) -> FractionalModulator:
    """F = edges incident to X; marginals at most twice the vertex marginals."""
    if pi.kind != "vertex":
        raise InvalidInput("expected a vertex modulator")
    G = pi.graph
    support = [([e for e in G.edges if e[0] in X or e[1] in X], p) for X, p in pi.support]
    return FractionalModulator(G, "edge", support, pi.parameter, pi.bound)


def vertex_from_edge(pi: FractionalModulator) -> FractionalModulator:
    """X = heads of the removed edges under a degeneracy orientation (in-degree <= D).

    G - X is a subgraph of G - F, so the parameter bound carries over for monotone parameters;
    each vertex is removed only through its at most D incoming arcs.
    """
    if pi.kind != "edge":
        raise InvalidInput("expected an edge modulator")
    G = pi.graph
    head = {_edge(t, h): h for t, h in degeneracy_orientation(G)}
    support = [({head[e] for e in F}, p) for F, p in pi.support]
    return FractionalModulator(G, "vertex", support, pi.parameter, pi.bound)


# fragile -> pliable


@dataclass
class PliableApprox:
    B: ValuedStructure
    omega: Overcast  # A -> B
    omega_back: Overcast  # B -> loss_factor * A
    loss_factor: Fraction
    survival: dict[tuple[str, tuple], Fraction]
    parameter_value: int
    sinks: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "B": self.B.to_json(),
            "omega": self.omega.to_json(),
            "omega_back": self.omega_back.to_json(),
            "loss_factor": fmt(self.loss_factor),
            "parameter_value": self.parameter_value,
        }


def fragile_to_pliable(A: ValuedStructure, pi: FractionalModulator, r: int | None = None) -> PliableApprox:
    """B = disjoint union over X of pi(X)*(A - X), with explicit overcasts both ways.

    omega sends A identically onto part X with probability pi(X); elements of X go to the
    part's sink (its first element). omega_back maps every part identically back to A.
    A tuple survives unless it meets X, so coverage of A is at least (1 - r*thinness)*A.
    """
    G = pi.graph
    if pi.kind != "vertex":
        raise InvalidInput("expected a vertex modulator")
    if list(G.vertices) != list(A.domain) or set(map(_edge_pair, G.edges)) != set(map(_edge_pair, gaifman(A).edges)):
        raise InvalidInput("modulator graph is not the Gaifman graph of the structure")
    if not pi.verify():
        raise VerificationError("a residual graph exceeds the modulator's parameter bound")
    r = A.signature.max_arity if r is None else int(r)
    if any(len(x) > r for _, x, _ in A.positive()):
        raise InvalidInput(f"a tuple has arity above {r}")
    parts, maps_fwd, maps_back, sinks = [], [], {}, []
    for i, (X, p) in enumerate(pi.support):
        keep = [a for a in A.domain if a not in X]
        if not keep:
            raise InvalidInput("a modulator set removes every element; no sink available")
        parts.append(rescale(A.restrict(keep), p))
        sink = union_tag(i, keep[0])
        sinks.append(sink)
        maps_fwd.append(({a: (sink if a in X else union_tag(i, a)) for a in A.domain}, p))
        for a in keep:
            maps_back[union_tag(i, a)] = a
    B = disjoint_union(parts)
    omega = Overcast(maps_fwd)
    omega_back = Overcast([(maps_back, 1)])
    loss = max(Fraction(0), 1 - r * pi.thinness)
    if not overcast_verify(omega, A, B).ok:
        raise AssertionError("internal error: forward overcast failed")
    rep = overcast_verify(omega_back, B, rescale(A, loss))
    if not rep.ok:
        raise AssertionError("internal error: backward overcast failed")
    survival = {}
    for name, x, v in A.positive():
        survival[(name, x)] = rep.coverage.get((name, x), Fraction(0)) / v
    pval, _ = parameter(gaifman(B), pi.parameter)
    return PliableApprox(B, omega, omega_back, loss, survival, pval, sinks)


def _edge_pair(e):
    return _edge(*e)


# weight bucketing


@dataclass
class BucketResult:
    removed: list[tuple[str, str]]
    removed_weight: Fraction
    total_weight: Fraction
    max_component: int
    phases: dict = field(default_factory=dict)
    cc_bound: int | None = None  # from the partitioner's declared component bound


def _bucket(w: Fraction, q: Fraction) -> int:
    """The i with q^i >= w > q^(i+1), for 0 < q < 1."""
    i = 0
    while q ** i < w:
        i -= 1
    while q ** (i + 1) >= w:
        i += 1
    return i


def bucket_edge_weights(G: Graph, weights: Mapping, partitioner: Callable[[Graph, Fraction], Iterable],
                        eps, max_degree: int | None = None) -> BucketResult:
    """Edge set F with w(F) <= eps*w(E), by reduction to an unweighted partitioner.

    Buckets by powers of q = eps/(6*D); drops the lightest residue class of buckets mod
    L = ceil(3/eps); cuts each block off from lighter blocks; then runs the partitioner on
    each block with eps' = alpha*eps/3, alpha being the block's measured min/max weight ratio.
    Surviving blocks share no vertex, so when the partitioner has a `component_bound(G, eps)`
    attribute the largest per-block bound is a bound for G - F, and it is checked.
    """
    eps = as_rational(eps)
    if not 0 < eps <= 1:
        raise InvalidInput("eps must lie in (0, 1]")
    w = {}
    for (u, v) in G.edges:
        e = _edge(u, v)
        key = next((k for k in ((u, v), (v, u)) if k in weights), None)
        if key is not None:
            w[e] = as_rational(weights[key])
        else:
            raise InvalidInput(f"edge {u}-{v} has no weight")
        if w[e] < 0:
            raise InvalidInput("negative edge weight")
    D = max_degree if max_degree is not None else G.max_degree()
    D = max(D, 1)
    q = eps / (6 * D)
    L = ceil(3 / eps)
    total = sum(w.values(), Fraction(0))
    zero = [e for e, x in w.items() if x == 0]
    bucket = {e: _bucket(x, q) for e, x in w.items() if x > 0}
    residue_w = [sum((w[e] for e, i in bucket.items() if i % L == j), Fraction(0)) for j in range(L)]
    jstar = min(range(L), key=lambda j: (residue_w[j], j))
    phase1 = [e for e, i in bucket.items() if i % L == jstar]
    blocks: dict[int, list] = {}
    for e, i in bucket.items():
        if i % L != jstar:
            blocks.setdefault((i - jstar - 1) // L, []).append(e)
    removed = set(zero) | set(phase1)
    phase2 = []
    order = sorted(blocks)
    for bi in order:
        live = [e for e in blocks[bi] if e not in removed]
        touched = {a for e in live for a in e}
        for bj in order:
            if bj <= bi:
                continue
            for e in blocks[bj]:
                if e not in removed and (e[0] in touched or e[1] in touched):
                    removed.add(e)
                    phase2.append(e)
    phase3, alphas, calls = [], {}, 0
    declared = getattr(partitioner, "component_bound", None)
    cc_bound = 1 if declared is not None else None
    for bi in order:
        live = [e for e in blocks[bi] if e not in removed]
        if not live:
            continue
        alpha = min(w[e] for e in live) / max(w[e] for e in live)
        alphas[bi] = alpha
        eps_b = alpha * eps / 3
        verts = sorted({a for e in live for a in e}, key=G.vertices.index)
        Gi = Graph(verts, live)
        Fi = [_edge(*map(str, e)) for e in partitioner(Gi, eps_b)]
        calls += 1
        if declared is not None:
            cc_bound = max(cc_bound, declared(Gi, eps_b))
        if any(not Gi.has_edge(*e) for e in Fi):
            raise InvalidInput("partitioner returned an edge outside its graph")
        if len(set(Fi)) > eps_b * Gi.m():
            raise InvalidInput(f"partitioner removed {len(set(Fi))} > {eps_b}*{Gi.m()} edges")
        for e in Fi:
            if e not in removed:
                removed.add(e)
                phase3.append(e)
    removed_list = [e for e in map(_edge_pair, G.edges) if e in removed]
    rw = sum((w[e] for e in removed_list), Fraction(0))
    if rw > eps * total:
        raise VerificationError(f"removed weight {rw} exceeds {eps}*{total}")
    cc = parameter(G.remove_edges(removed_list), "cc")[0]
    if cc_bound is not None and cc > cc_bound:
        raise VerificationError(f"largest component {cc} exceeds the declared bound {cc_bound}")
    phases = {"L": L, "q": q, "j_star": jstar, "buckets": len(set(bucket.values())),
              "zero": zero, "residue_class": phase1, "boundaries": phase2, "cuts": phase3,
              "alphas": alphas, "partitioner_calls": calls,
              "weights": {"residue_class": sum((w[e] for e in phase1), Fraction(0)),
                          "boundaries": sum((w[e] for e in phase2), Fraction(0)),
                          "cuts": sum((w[e] for e in phase3), Fraction(0))}}
    return BucketResult(removed_list, rw, total, cc, phases, cc_bound)


def path_cutter(G: Graph, eps) -> list[tuple[str, str]]:
    """Unweighted partitioner for graphs of max degree 2: cuts every t-th edge, t = ceil(1/eps).

    Removes at most eps*|E| edges and leaves components of at most t vertices.
    """
    eps = as_rational(eps)
    if G.max_degree() > 2:
        raise InvalidInput("path_cutter needs max degree <= 2")
    if eps <= 0:
        raise InvalidInput("eps must be positive")
    t = ceil(1 / eps)
    out = []
    for C in components(G):
        if C.m() == 0:
            continue
        ends = [v for v in C.vertices if C.degree(v) == 1]
        prev, cur = None, (ends[0] if ends else C.vertices[0])
        walk, used = [], set()
        while True:
            nxt = [u for u in sorted(C.adj[cur]) if u != prev and _edge(cur, u) not in used]
            if not nxt:
                break
            walk.append((cur, nxt[0]))
            used.add(_edge(cur, nxt[0]))
            prev, cur = cur, nxt[0]
        out.extend(walk[k] for k in range(t - 1, len(walk), t))
    return out


def grid_slab_cutter(G: Graph, eps) -> list[tuple[str, str]]:
    """Unweighted partitioner for complete 2D grids (ids "i_j"): cuts grid lines every t = ceil(1/eps)."""
    eps = as_rational(eps)
    if eps <= 0:
        raise InvalidInput("eps must be positive")
    t = ceil(1 / eps)
    out = []
    for u, v in G.edges:
        a, b = grid_coords(u), grid_coords(v)
        axis = next(k for k in range(len(a)) if a[k] != b[k])
        lo = min(a[axis], b[axis])
        if lo % t == t - 1:
            out.append((u, v))
    return out


path_cutter.component_bound = lambda G, eps: ceil(1 / as_rational(eps))
grid_slab_cutter.component_bound = lambda G, eps: ceil(1 / as_rational(eps)) ** len(grid_coords(G.vertices[0]))


# extraction from overcasts


def edge_labeled_structure(G: Graph) -> tuple[ValuedStructure, dict[str, tuple[str, str]]]:
    """One binary symbol per edge, carrying that edge (in its listed order) with value 1."""
    if G.m() == 0:
        raise InvalidInput("graph has no edges")
    names = {f"f{i}": (u, v) for i, (u, v) in enumerate(G.edges)}
    sig = Signature(tuple((n, 2) for n in names))
    return ValuedStructure(sig, G.vertices, {n: {e: 1} for n, e in names.items()}), names


def extraction_epsilon(factor) -> Fraction:
    """Least eps with r(eps/2) <= factor, i.e. eps = 2*(1/factor - 1)."""
    factor = as_rational(factor)
    if not 0 < factor <= 1:
        raise InvalidInput("factor must lie in (0, 1]")
    return 2 * (1 / factor - 1)


@dataclass
class Extraction:
    modulator: FractionalModulator
    max_marginal: Fraction
    embeddings_ok: bool
    eps: Fraction | None


def extract_edge_modulator(G: Graph, A: ValuedStructure, B: ValuedStructure, omega: Overcast,
                           omega_back: Overcast, eps=None, parameter_name: str = "tw") -> Extraction:
    """Distribution of F = {e : g'(g(e)) != e or f_e^B(g(e)) = 0} over pairs (g, g').

    With eps given both overcasts must verify against r(eps/2); every marginal is then at
    most eps. For each pair, G - F embeds into Gaifman(B) through g; the embedding is checked.
    """
    labels = _check_labeling(G, A)
    if eps is not None:
        eps = as_rational(eps)
        r = surrogate_factor(eps / 2)
        if not overcast_verify(omega, A, rescale(B, r)).ok or not overcast_verify(omega_back, B, rescale(A, r)).ok:
            raise VerificationError(f"overcasts do not verify at factor {r}")
    GB = gaifman(B)
    support = []
    embeddings_ok = True
    for g, p in omega:
        for g2, p2 in omega_back:
            F = []
            for name, (u, v) in labels.items():
                img = (g[u], g[v])
                if (g2[img[0]], g2[img[1]]) != (u, v) or B.value(name, img) == 0:
                    F.append((u, v))
            Fset = {_edge(*e) for e in F}
            kept = [e for e in G.edges if _edge(*e) not in Fset]
            verts = {a for e in kept for a in e}
            if len({g[a] for a in verts}) != len(verts) or any(not GB.has_edge(g[u], g[v]) for u, v in kept):
                embeddings_ok = False
            support.append((F, p * p2))
    bound = parameter(GB, parameter_name)[0]
    pi = FractionalModulator(G, "edge", support, parameter_name, bound)
    mm = pi.thinness
    if eps is not None and mm > eps:
        raise AssertionError("internal error: extracted marginal exceeds eps")
    return Extraction(pi, mm, embeddings_ok, eps)


def _check_labeling(G: Graph, A: ValuedStructure) -> dict[str, tuple[str, str]]:
    if list(A.domain) != list(G.vertices):
        raise InvalidInput("structure domain differs from the graph's vertices")
    labels, seen = {}, set()
    for name in A.signature.names:
        if A.signature.arity(name) != 2:
            raise InvalidInput(f"symbol {name!r} is not binary")
        tab = A.table(name)
        if len(tab) != 1:
            raise InvalidInput(f"symbol {name!r} must carry exactly one tuple")
        (u, v), = tab
        e = _edge(u, v)
        if not G.has_edge(u, v) or e in seen:
            raise InvalidInput(f"symbol {name!r} does not label a distinct edge")
        seen.add(e)
        labels[name] = (u, v)
    if len(seen) != G.m():
        raise InvalidInput("some edge carries no symbol")
    return labels
