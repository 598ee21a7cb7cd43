import itertools
import random
from fractions import Fraction

from hypothesis import strategies as st

from pliable.graphs import Graph
from pliable.structures import Signature, ValuedStructure, graph_structure

SIG_EU = Signature((("e", 2), ("u", 1)))
VALUES = [Fraction(0), Fraction(1, 2), Fraction(1), Fraction(2), Fraction(3, 4)]


def K(n, prefix="v"):
    ids = [f"{prefix}{i}" for i in range(n)]
    return graph_structure(ids, [(ids[i], ids[j]) for i in range(n) for j in range(i + 1, n)])


def P(n, prefix="p"):
    ids = [f"{prefix}{i}" for i in range(n)]
    return graph_structure(ids, [(ids[i], ids[i + 1]) for i in range(n - 1)])


def random_structure(rng: random.Random, n: int, sig=SIG_EU, density=0.5, prefix="a") -> ValuedStructure:
    dom = [f"{prefix}{i}" for i in range(n)]
    vals = {}
    for name, ar in sig.symbols:
        tab = {}
        for x in _tuples(dom, ar):
            if rng.random() < density:
                tab[x] = rng.choice(VALUES[1:])
        vals[name] = tab
    return ValuedStructure(sig, dom, vals)


def random_graph_structure(rng: random.Random, n: int, p=0.5, prefix="a", weights=False) -> ValuedStructure:
    dom = [f"{prefix}{i}" for i in range(n)]
    edges = [(dom[i], dom[j]) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    w = {e: rng.choice(VALUES[1:]) for e in edges} if weights else None
    return graph_structure(dom, edges, w)


def _tuples(dom, ar):
    return list(itertools.product(dom, repeat=ar))


@st.composite
def structures(draw, min_size=1, max_size=4, sig=SIG_EU, prefix="a"):
    n = draw(st.integers(min_size, max_size))
    dom = [f"{prefix}{i}" for i in range(n)]
    vals = {}
    for name, ar in sig.symbols:
        pool = _tuples(dom, ar)
        chosen = draw(st.lists(st.sampled_from(pool), max_size=min(len(pool), 6), unique=True)) if pool else []
        vals[name] = {x: draw(st.sampled_from(VALUES[1:])) for x in chosen}
    return ValuedStructure(sig, dom, vals)


@st.composite
def graphs(draw, min_size=1, max_size=7, prefix="g"):
    n = draw(st.integers(min_size, max_size))
    dom = [f"{prefix}{i}" for i in range(n)]
    pairs = [(dom[i], dom[j]) for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return Graph(dom, chosen)


def as_struct(G: Graph) -> ValuedStructure:
    return graph_structure(G.vertices, G.edges)

