"""Rational-valued relational structures and the basic operations on them."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

from .errors import InfiniteDistance, InvalidInput, PartialAssignment, SignatureMismatch, CapExceeded
from .rationals import as_rational, fmt

Assignment = Mapping[str, str]

EDIT_MATCHING_CAP = 8


@dataclass(frozen=True)
class Signature:
    """Ordered symbols with arities. Arity 0 is accepted for packed signatures."""

    symbols: tuple[tuple[str, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple((str(n), int(a)) for n, a in self.symbols))
        if not self.symbols:
            raise InvalidInput("signature needs at least one symbol")
        names = [n for n, _ in self.symbols]
        if len(set(names)) != len(names):
            raise InvalidInput("duplicate symbol names")
        if any(a < 0 for _, a in self.symbols):
            raise InvalidInput("negative arity")

    def arity(self, name: str) -> int:
        for n, a in self.symbols:
            if n == name:
                return a
        raise InvalidInput(f"unknown symbol {name!r}")

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.symbols]

    @property
    def max_arity(self) -> int:
        return max(a for _, a in self.symbols)

    @property
    def c_sigma(self) -> int:
        """max_f ar(f)^ar(f), the constant linking edit distance and opt-distance."""
        return max(max(a, 1) ** a for _, a in self.symbols)


GRAPH_SIGNATURE = Signature((("e", 2),))


class ValuedStructure:
    """A finite domain plus, for every symbol, a sparse map tuple -> positive rational."""

    __slots__ = ("signature", "domain", "_values", "_index")

    def __init__(self, signature: Signature, domain: Iterable, values: Mapping | None = None):
        self.signature = signature
        dom = tuple(str(a) for a in domain)
        if not dom:
            raise InvalidInput("domain must be non-empty")
        if len(set(dom)) != len(dom):
            raise InvalidInput("duplicate domain elements")
        self.domain = dom
        self._index = {a: i for i, a in enumerate(dom)}
        vals: dict[str, dict[tuple, Fraction]] = {n: {} for n in signature.names}
        for name, table in (values or {}).items():
            if name not in vals:
                raise InvalidInput(f"symbol {name!r} not in signature")
            ar = signature.arity(name)
            for x, v in table.items():
                x = tuple(str(a) for a in x)
                if len(x) != ar:
                    raise InvalidInput(f"tuple {x} has wrong length for {name}/{ar}")
                for a in x:
                    if a not in self._index:
                        raise InvalidInput(f"tuple element {a!r} not in domain")
                v = as_rational(v)
                if v < 0:
                    raise InvalidInput("values must be nonnegative")
                if v > 0:
                    vals[name][x] = vals[name].get(x, Fraction(0)) + v
        self._values = vals

    # access

    def value(self, name: str, x) -> Fraction:
        return self._values[name].get(tuple(x), Fraction(0))

    def table(self, name: str) -> dict[tuple, Fraction]:
        return dict(self._values[name])

    def positive(self) -> Iterator[tuple[str, tuple, Fraction]]:
        """Positive tuples as (symbol, tuple, value), in a fixed order."""
        for name in self.signature.names:
            tab = self._values[name]
            for x in sorted(tab, key=self._key):
                yield name, x, tab[x]

    def _key(self, x):
        return tuple(self._index[a] for a in x)

    def index(self, a: str) -> int:
        return self._index[a]

    def __contains__(self, a) -> bool:
        return a in self._index

    def __len__(self) -> int:
        return len(self.domain)

    def norm1(self, name: str | None = None) -> Fraction:
        if name is not None:
            return sum(self._values[name].values(), Fraction(0))
        return sum((self.norm1(n) for n in self.signature.names), Fraction(0))

    def norm_inf(self) -> Fraction:
        return max((v for _, _, v in self.positive()), default=Fraction(0))

    def values_dict(self) -> dict[str, dict[tuple, Fraction]]:
        return {n: dict(t) for n, t in self._values.items()}

    def restrict(self, keep: Iterable[str]) -> "ValuedStructure":
        """Induced substructure on `keep` (tuples touching other elements are dropped)."""
        keep_set = set(keep)
        dom = [a for a in self.domain if a in keep_set]
        vals = {n: {x: v for x, v in t.items() if all(a in keep_set for a in x)} for n, t in self._values.items()}
        return ValuedStructure(self.signature, dom, vals)

    def relabel(self, mapping: Mapping[str, str]) -> "ValuedStructure":
        """Rename elements through an injective mapping."""
        dom = [mapping[a] for a in self.domain]
        vals = {n: {tuple(mapping[a] for a in x): v for x, v in t.items()} for n, t in self._values.items()}
        return ValuedStructure(self.signature, dom, vals)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ValuedStructure)
            and self.signature == other.signature
            and set(self.domain) == set(other.domain)
            and self._values == other._values
        )

    def __hash__(self):
        return hash((self.signature, frozenset(self.domain)))

    def __repr__(self) -> str:
        n = sum(len(t) for t in self._values.values())
        return f"ValuedStructure(|A|={len(self.domain)}, tuples={n}, norm={self.norm1()})"

    # serialization

    def to_json(self) -> dict:
        return {
            "signature": [{"name": n, "arity": a} for n, a in self.signature.symbols],
            "domain": list(self.domain),
            "values": {
                n: [{"tuple": list(x), "value": fmt(v)} for m, x, v in self.positive() if m == n]
                for n in self.signature.names
            },
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "ValuedStructure":
        try:
            sig = Signature(tuple((s["name"], s["arity"]) for s in data["signature"]))
            values = {}
            for name, rows in data.get("values", {}).items():
                tab: dict[tuple, Fraction] = {}
                for row in rows:
                    x = tuple(str(a) for a in row["tuple"])
                    tab[x] = tab.get(x, Fraction(0)) + as_rational(row["value"])
                values[name] = tab
            return cls(sig, data["domain"], values)
        except (KeyError, TypeError) as exc:
            raise InvalidInput(f"malformed structure JSON: {exc}") from exc

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def graph_structure(vertices: Iterable, edges: Iterable, weights: Mapping | None = None) -> ValuedStructure:
    """Undirected (weighted) graph as a structure over {e/2}; each edge stored in both orders."""
    vertices = [str(v) for v in vertices]
    tab: dict[tuple, Fraction] = {}
    for e in edges:
        u, v = (str(a) for a in e)
        if u == v:
            raise InvalidInput("loops are not allowed in graph encodings")
        w = Fraction(1)
        if weights is not None:
            w = as_rational(weights.get((u, v), weights.get((v, u), weights.get(frozenset((u, v)), 1))))
        tab[(u, v)] = w
        tab[(v, u)] = w
    return ValuedStructure(GRAPH_SIGNATURE, vertices, {"e": tab})


def _same_signature(A: ValuedStructure, B: ValuedStructure):
    if A.signature != B.signature:
        raise SignatureMismatch(f"{A.signature.symbols} != {B.signature.symbols}")


def val(A: ValuedStructure, B: ValuedStructure, h: Assignment) -> Fraction:
    """Sum over positive tuples of A of f^A(x) * f^B(h(x))."""
    _same_signature(A, B)
    missing = [a for a in A.domain if a not in h]
    if missing:
        raise PartialAssignment(f"assignment undefined on {missing[:5]}")
    bad = [a for a in A.domain if h[a] not in B]
    if bad:
        raise PartialAssignment(f"assignment leaves the target domain at {bad[:5]}")
    total = Fraction(0)
    for name, x, v in A.positive():
        w = B.value(name, tuple(h[a] for a in x))
        if w:
            total += v * w
    return total


def rescale(A: ValuedStructure, lam) -> ValuedStructure:
    lam = as_rational(lam)
    if lam < 0:
        raise InvalidInput("rescaling factor must be nonnegative")
    vals = {n: {x: lam * v for x, v in t.items()} for n, t in A.values_dict().items()}
    return ValuedStructure(A.signature, A.domain, vals)


def union_tag(i: int, a: str) -> str:
    return f"{i}:{a}"


def disjoint_union(parts: list[ValuedStructure]) -> ValuedStructure:
    """Disjoint union; element a of part i becomes "i:a"."""
    if not parts:
        raise InvalidInput("disjoint union of an empty list")
    sig = parts[0].signature
    dom: list[str] = []
    vals: dict[str, dict[tuple, Fraction]] = {n: {} for n in sig.names}
    for i, P in enumerate(parts):
        if P.signature != sig:
            raise SignatureMismatch("parts do not share a signature")
        dom.extend(union_tag(i, a) for a in P.domain)
        for name, x, v in P.positive():
            y = tuple(union_tag(i, a) for a in x)
            vals[name][y] = vals[name].get(y, Fraction(0)) + v
    return ValuedStructure(sig, dom, vals)


def gaifman(A: ValuedStructure):
    from .graphs import Graph

    edges = set()
    for _, x, _ in A.positive():
        s = sorted(set(x), key=A.index)
        for u, v in itertools.combinations(s, 2):
            edges.add((u, v))
    return Graph(A.domain, sorted(edges, key=lambda e: (A.index(e[0]), A.index(e[1]))))


def is_clean(A: ValuedStructure) -> bool:
    return all(len(set(x)) == len(x) for _, x, _ in A.positive())


def _edit_under(A: ValuedStructure, B: ValuedStructure, phi: Mapping[str, str]) -> Fraction:
    total = Fraction(0)
    for name in A.signature.names:
        na, nb = A.norm1(name), B.norm1(name)
        if na == 0 and nb == 0:
            continue
        if na == 0 or nb == 0:
            raise InfiniteDistance(f"symbol {name!r} is empty on exactly one side")
        ta, tb = A.table(name), B.table(name)
        diff = Fraction(0)
        seen = set()
        for x, v in ta.items():
            y = tuple(phi[a] for a in x)
            seen.add(y)
            diff += abs(v - tb.get(y, 0))
        for y, w in tb.items():
            if y not in seen:
                diff += w
        total += diff / min(na, nb)
    return total


def edit_distance(A: ValuedStructure, B: ValuedStructure, phi: Mapping[str, str] | None = None,
                  cap: int = EDIT_MATCHING_CAP) -> Fraction:
    """Normalized L1 distance under phi, or minimized over all bijections when phi is None."""
    _same_signature(A, B)
    if len(A) != len(B):
        raise InvalidInput("edit distance needs equal domain sizes")
    if phi is not None:
        if sorted(phi[a] for a in A.domain) != sorted(B.domain):
            raise InvalidInput("phi is not a bijection between the domains")
        return _edit_under(A, B, phi)
    if len(A) > cap:
        raise CapExceeded(f"|domain| = {len(A)} exceeds the matching cap {cap}; supply phi")
    best = None
    for perm in itertools.permutations(B.domain):
        d = _edit_under(A, B, dict(zip(A.domain, perm)))
        if best is None or d < best:
            best = d
            if best == 0:
                break
    return best


def pullback(A: ValuedStructure, g: Assignment) -> dict[str, dict[tuple, Fraction]]:
    """f^A(g^{-1}(x)) for every image tuple x with positive preimage weight."""
    out: dict[str, dict[tuple, Fraction]] = {n: {} for n in A.signature.names}
    for name, x, v in A.positive():
        y = tuple(g[a] for a in x)
        out[name][y] = out[name].get(y, Fraction(0)) + v
    return out


def img(g: Assignment, A: ValuedStructure, B: ValuedStructure) -> ValuedStructure:
    """Structure on B's domain with values min(f^A(g^{-1}(x)), f^B(x))."""
    _same_signature(A, B)
    pb = pullback(A, g)
    vals = {}
    for name in B.signature.names:
        tb = B.table(name)
        vals[name] = {y: min(w, tb[y]) for y, w in pb[name].items() if y in tb}
    return ValuedStructure(B.signature, B.domain, vals)


def components(A: ValuedStructure) -> list[list[str]]:
    """Domain partitioned by connected components of the Gaifman graph, in domain order."""
    from .graphs import components as graph_components

    return [list(C.vertices) for C in graph_components(gaifman(A))]
