"""Exact opt(A, B): brute-force enumeration and dynamic programming over a tree decomposition."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Mapping

from .errors import CapExceeded, InvalidInput
from .graphs import TreeDecomposition, best_decomposition
from .structures import ValuedStructure, _same_signature, gaifman, val

BRUTE_FORCE_CAP = 10**7
DP_CAP = 10**7


@dataclass
class OptResult:
    value: Fraction
    witness: dict[str, str]


def _integer_tables(A: ValuedStructure, B: ValuedStructure):
    """Scale both structures to integers; returns A tuples as index tuples, B lookup and the scale."""
    da = lcm(*[v.denominator for _, _, v in A.positive()], 1)
    db = lcm(*[v.denominator for _, _, v in B.positive()], 1)
    a_tuples = [(name, tuple(A.index(a) for a in x), int(v * da)) for name, x, v in A.positive()]
    b_tab = {name: {tuple(B.index(b) for b in y): int(w * db) for y, w in B.table(name).items()}
             for name in B.signature.names}
    return a_tuples, b_tab, da * db


def opt_with_forced(A: ValuedStructure, B: ValuedStructure, pins: Mapping[str, str] | None = None,
                    cap: int = BRUTE_FORCE_CAP) -> OptResult:
    """Maximum of val over maps extending `pins`; lexicographically least maximizer."""
    _same_signature(A, B)
    pins = dict(pins or {})
    for a, b in pins.items():
        if a not in A or b not in B:
            raise InvalidInput(f"pin {a}->{b} outside the domains")
    free = [i for i, a in enumerate(A.domain) if a not in pins]
    nb = len(B.domain)
    if nb ** len(free) > cap:
        raise CapExceeded(f"{nb}^{len(free)} maps exceed the brute-force cap {cap}; use opt_treedec")
    a_tuples, b_tab, scale = _integer_tables(A, B)
    h = [B.index(pins[a]) if a in pins else 0 for a in A.domain]
    best, best_h = None, None
    for choice in itertools.product(range(nb), repeat=len(free)):
        for i, c in zip(free, choice):
            h[i] = c
        s = 0
        for name, x, v in a_tuples:
            w = b_tab[name].get(tuple(h[i] for i in x))
            if w:
                s += v * w
        if best is None or s > best:
            best, best_h = s, list(h)
    witness = {a: B.domain[best_h[i]] for i, a in enumerate(A.domain)}
    return OptResult(Fraction(best, scale), witness)


def opt_bruteforce(A: ValuedStructure, B: ValuedStructure, cap: int = BRUTE_FORCE_CAP) -> OptResult:
    return opt_with_forced(A, B, {}, cap)


def opt_treedec(A: ValuedStructure, B: ValuedStructure, T: TreeDecomposition | None = None,
                cap: int = DP_CAP) -> OptResult:
    """Dynamic programming over a tree decomposition of gaifman(A)."""
    _same_signature(A, B)
    G = gaifman(A)
    if T is None:
        T, _ = best_decomposition(G)
    problems = T.problems(G)
    if problems:
        raise InvalidInput(f"invalid tree decomposition: {problems[:3]}")
    nb = len(B.domain)
    if nb ** (T.width + 1) * len(T.bags) > cap:
        raise CapExceeded("DP tables exceed the memory cap")
    a_tuples, b_tab, scale = _integer_tables(A, B)
    bags = [sorted((A.index(a) for a in bag)) for bag in T.bags]
    nbrs = T.neighbors()
    # root at bag 0
    order, parent, depth = [0], {0: None}, {0: 0}
    for t in order:
        for c in nbrs[t]:
            if c not in parent:
                parent[c] = t
                depth[c] = depth[t] + 1
                order.append(c)
    children = {t: [c for c in nbrs[t] if parent.get(c) == t] for t in order}
    charged: dict[int, list] = {t: [] for t in order}
    constant = 0
    bagsets = [set(b) for b in bags]
    for name, x, v in a_tuples:
        if not x:
            constant += v * b_tab[name].get((), 0)
            continue
        S = set(x)
        homes = [t for t in order if S <= bagsets[t]]
        if not homes:
            raise InvalidInput("a tuple's support lies in no bag")
        charged[min(homes, key=lambda t: depth[t])].append((name, x, v))

    tables: dict[int, dict[tuple, int]] = {}
    messages: dict[int, dict[tuple, tuple[int, tuple]]] = {}
    for t in reversed(order):
        bag = bags[t]
        pos = {a: i for i, a in enumerate(bag)}
        local = [(name, tuple(pos[a] for a in x), v) for name, x, v in charged[t]]
        msgs = []
        for c in children[t]:
            shared = [a for a in bags[c] if a in pos]
            msgs.append(([pos[a] for a in shared], messages[c]))
        table = {}
        for asg in itertools.product(range(nb), repeat=len(bag)):
            s = 0
            for name, x, v in local:
                w = b_tab[name].get(tuple(asg[i] for i in x))
                if w:
                    s += v * w
            for idxs, msg in msgs:
                s += msg[tuple(asg[i] for i in idxs)][0]
            table[asg] = s
        tables[t] = table
        if parent[t] is not None:
            pbag = set(bags[parent[t]])
            shared_pos = [i for i, a in enumerate(bag) if a in pbag]
            msg: dict[tuple, tuple[int, tuple]] = {}
            for asg, s in table.items():
                key = tuple(asg[i] for i in shared_pos)
                if key not in msg or s > msg[key][0]:
                    msg[key] = (s, asg)
            messages[t] = msg
    root_asg, root_val = max(tables[0].items(), key=lambda kv: (kv[1], [-q for q in kv[0]]))
    h: dict[int, int] = {}
    stack = [(0, root_asg)]
    while stack:
        t, asg = stack.pop()
        for a, b in zip(bags[t], asg):
            h[a] = b
        for c in children[t]:
            key = tuple(asg[bags[t].index(a)] for a in bags[c] if a in bagsets[t])
            stack.append((c, messages[c][key][1]))
    witness = {a: B.domain[h.get(i, 0)] for i, a in enumerate(A.domain)}
    value = Fraction(root_val + constant, scale)
    assert val(A, B, witness) == value
    return OptResult(value, witness)


def opt(A: ValuedStructure, B: ValuedStructure) -> OptResult:
    """Brute force when small, otherwise tree-decomposition DP."""
    if len(B.domain) ** len(A.domain) <= 10**5:
        return opt_bruteforce(A, B)
    return opt_treedec(A, B)
