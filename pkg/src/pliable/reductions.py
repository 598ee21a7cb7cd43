"""Size reductions: merging rescaled components, vector rounding, cc -> size, and pack/unpack
for bounded treedepth."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import floor, log
from typing import Sequence

from .errors import CapExceeded, InvalidInput, VerificationError
from .graphs import TD_EXACT_CAP, treedepth_reducing_vertex
from .overcast import Overcast, compose, couple, edit_overcast, overcast_verify
from .rationals import as_rational, fmt, surrogate_factor
from .structures import Signature, ValuedStructure, components, edit_distance, gaifman, is_clean, rescale

CANONICAL_PERM_CAP = 8


# vector rounding


def _max_power(base: Fraction, bound: Fraction) -> int:
    """Largest integer a >= 0 with base**a <= bound (base > 1, bound >= 1)."""
    a = max(0, floor(log(bound) / log(base)) - 1) if bound > 1 else 0
    while base ** (a + 1) <= bound:
        a += 1
    while a > 0 and base ** a > bound:
        a -= 1
    return a


def _max_power_upper(base: Fraction, bound: Fraction) -> int:
    """An integer >= _max_power(base, bound): exact while the powers stay small, else log estimate + 1."""
    est = floor(log(bound) / log(base)) if bound > 1 else 0
    bits = base.numerator.bit_length() + base.denominator.bit_length()
    if (est + 1) * bits <= 1 << 20:
        return _max_power(base, bound)
    # float log error is far below 1 at these magnitudes; +1 keeps the estimate on the safe side
    return est + 1


def class_bound(d: int, eps) -> int:
    """Bound on the nonzero rescaling classes produced by round_vectors(d, eps).

    k(1) = 1 and k(d) = (2+K)^(d-1) + k(d-1, eps/3), with K the largest a such that
    (1+eps/3)^a <= 3d/eps^2. Deep levels may use an upper estimate of K, which keeps the
    bound valid.
    """
    eps = as_rational(eps)
    if d <= 1:
        return 1
    K = _max_power_upper(1 + eps / 3, 3 * d / eps**2)
    return (2 + K) ** (d - 1) + class_bound(d - 1, eps / 3)


def _class_key(w: Sequence[Fraction]):
    for x in w:
        if x:
            return tuple(y / x for y in w)
    return None


@dataclass
class RoundingResult:
    vectors: list[list[Fraction]]
    classes: int  # nonzero vectors up to rescaling
    bound: int
    errors: list[Fraction]  # per-coordinate sum |v - w|
    masses: list[Fraction]  # per-coordinate sum v
    eps: Fraction

    @property
    def within_error(self) -> bool:
        return all(e <= self.eps * m for e, m in zip(self.errors, self.masses))


def _round(vs: list[list[Fraction]], eps: Fraction) -> list[list[Fraction]]:
    d = len(vs[0]) if vs else 0
    ws = [list(v) for v in vs]
    if d <= 1:
        return ws
    beta = 1 + eps / 3
    for i in range(1, d):
        mass_i = sum(w[i] for w in ws)
        budget = eps / 3 * mass_i
        # least ratio at which the cumulative mass of coordinate i (inclusive) exceeds the budget
        ratios = sorted((w[i] / w[0], w[i]) for w in ws if w[0] > 0)
        c, acc = None, Fraction(0)
        for rho, m in ratios:
            acc += m
            if acc > budget:
                c = rho
                break
        if c is None:
            for w in ws:
                if w[0] > 0:
                    w[i] = Fraction(0)
            continue
        c2 = c * 3 * d / eps**2
        for w in ws:
            if w[0] > 0 and w[i] < c * w[0]:
                w[i] = Fraction(0)
            elif w[i] >= c2 * w[0]:
                w[0] = Fraction(0)
            else:
                a = _max_power(beta, w[i] / (c * w[0]))
                w[i] = c * beta**a * w[0]
    # vectors with a zeroed first coordinate recurse on the remaining coordinates
    rest = [j for j, w in enumerate(ws) if w[0] == 0]
    if rest:
        sub = _round([ws[j][1:] for j in rest], eps / 3)
        for j, s in zip(rest, sub):
            ws[j][1:] = s
    return ws


def round_vectors(vectors: Sequence[Sequence], eps) -> RoundingResult:
    """Perturb nonnegative vectors so few remain up to rescaling.

    For every coordinate i, sum_j |v_j[i] - w_j[i]| <= eps * sum_j v_j[i]; w <= v entrywise.
    The rounding grid uses the rational base 1 + eps/3.
    """
    eps = as_rational(eps)
    if eps <= 0:
        raise InvalidInput("eps must be positive")
    vs = [[as_rational(x) for x in v] for v in vectors]
    if not vs:
        return RoundingResult([], 0, 0, [], [], eps)
    d = len(vs[0])
    if any(len(v) != d for v in vs):
        raise InvalidInput("vectors differ in dimension")
    if any(x < 0 for v in vs for x in v):
        raise InvalidInput("vectors must be nonnegative")
    ws = _round(vs, eps)
    errors = [sum(abs(v[i] - w[i]) for v, w in zip(vs, ws)) for i in range(d)]
    masses = [sum(v[i] for v in vs) for i in range(d)]
    keys = {_class_key(w) for w in ws} - {None}
    res = RoundingResult(ws, len(keys), class_bound(d, eps), errors, masses, eps)
    if not res.within_error or res.classes > res.bound or any(x > y for v, w in zip(vs, ws) for x, y in zip(w, v)):
        raise AssertionError("internal error: rounding guarantees violated")
    return res


# component merging


def _canonical(S: ValuedStructure):
    """Permutation-invariant key of a structure up to rescaling, plus the ordering attaining it."""
    total = S.norm1()
    n = len(S.domain)
    perms = itertools.permutations(range(n)) if n <= CANONICAL_PERM_CAP else [tuple(range(n))]
    best = None
    tuples = list(S.positive())
    for perm in perms:
        pos = {S.domain[i]: perm[i] for i in range(n)}
        key = tuple(sorted((name, tuple(pos[a] for a in x), v / total) for name, x, v in tuples))
        if best is None or key < best[0]:
            best = (key, pos)
    return (n, best[0]), best[1], total


@dataclass
class MergeResult:
    B: ValuedStructure
    forward: Overcast  # A -> B, deterministic
    backward: Overcast  # B -> A
    classes: int


def merge_components(A: ValuedStructure, prefix: str = "k") -> MergeResult:
    """Merge components equal up to isomorphism and rescaling into one copy at summed scale.

    Components without tuples collapse into a single isolated element. Elements of the
    output are named prefix<class>.<position>.
    """
    nullary = {name: A.table(name) for name in A.signature.names if A.signature.arity(name) == 0}
    classes: dict = {}
    order = []
    empty = []
    for comp in components(A):
        S = A.restrict(comp)
        if not any(x for _, x, _ in S.positive()):
            empty.extend(comp)
            continue
        S = ValuedStructure(S.signature, S.domain,
                            {n: t for n, t in S.values_dict().items() if A.signature.arity(n) > 0})
        key, pos, total = _canonical(S)
        if key not in classes:
            classes[key] = []
            order.append(key)
        classes[key].append((comp, pos, total))
    dom, vals = [], {name: dict(t) for name, t in nullary.items()}
    for name in A.signature.names:
        vals.setdefault(name, {})
    fwd: dict[str, str] = {}
    back_parts = []
    for k, key in enumerate(order):
        n, tuples = key
        ids = [f"{prefix}{k}.{p}" for p in range(n)]
        dom.extend(ids)
        lam = sum(t for _, _, t in classes[key])
        for name, x, v in tuples:
            vals[name][tuple(ids[p] for p in x)] = lam * v
        for comp, pos, _ in classes[key]:
            for a in comp:
                fwd[a] = ids[pos[a]]
        back_parts.append(Overcast(({ids[pos[a]]: a for a in comp}, t / lam) for comp, pos, t in classes[key]))
    if empty or not dom:
        dom.append(f"{prefix}.iso")
        for a in empty:
            fwd[a] = dom[-1]
        if A.domain:
            back_parts.append(Overcast([({dom[-1]: (empty or list(A.domain))[0]}, 1)]))
    B = ValuedStructure(A.signature, dom, vals)
    forward = Overcast([(fwd, 1)])
    backward = couple(back_parts)
    if not overcast_verify(forward, A, B).ok or not overcast_verify(backward, B, A).ok:
        raise AssertionError("internal error: merge overcasts failed verification")
    return MergeResult(B, forward, backward, len(order))


# cc -> size


def _slot_coordinates(signature: Signature, d: int) -> list[tuple[str, tuple[int, ...]]]:
    return [(name, pos) for name in signature.names if signature.arity(name) > 0
            for pos in itertools.product(range(d), repeat=signature.arity(name))]


@dataclass
class SizeReduction:
    B: ValuedStructure
    eps: Fraction
    factor: Fraction  # verified: A >= factor*B and B >= factor*A
    forward: Overcast
    backward: Overcast
    classes: int
    bound_size: int
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "B": self.B.to_json(),
            "eps": fmt(self.eps),
            "factor": fmt(self.factor),
            "forward": self.forward.to_json(),
            "backward": self.backward.to_json(),
            "classes": self.classes,
            "size_bound": self.bound_size,
        }


def cc_to_size(A: ValuedStructure, eps, d: int | None = None, prefix: str = "k") -> SizeReduction:
    """Bounded-size B with verified overcasts A >= r(eps)*B and B >= r(eps)*A.

    Components (at most d elements) become vectors over all d-position tuples, are rounded
    at eps' = (eps/C)/(1+eps/C) and merged by rescaling class. The first hop goes through
    the edit-distance overcast (factor 1/(1+C*d_edit) >= r(eps)), the second is exact.
    """
    eps = as_rational(eps)
    if eps <= 0:
        raise InvalidInput("eps must be positive")
    if not is_clean(A):
        raise InvalidInput("cc_to_size needs a clean structure (no repeated entries in a tuple)")
    comps = components(A)
    size = max((len(c) for c in comps), default=0)
    d = size if d is None else int(d)
    if size > d:
        raise InvalidInput(f"a component has {size} > {d} elements")
    C = A.signature.c_sigma
    eps1 = (eps / C) / (1 + eps / C)
    coords = _slot_coordinates(A.signature, d)
    vecs = []
    for comp in comps:
        pos = {a: i for i, a in enumerate(comp)}
        vecs.append([A.value(name, tuple(comp[i] for i in p)) if max(p, default=-1) < len(comp) else Fraction(0)
                     for name, p in coords])
    rounding = round_vectors(vecs, eps1) if vecs else None
    vals = {name: {} for name in A.signature.names}
    for name in A.signature.names:
        if A.signature.arity(name) == 0:
            vals[name] = dict(A.table(name))
    for comp, w in zip(comps, rounding.vectors if rounding else []):
        for (name, p), x in zip(coords, w):
            if x:
                vals[name][tuple(comp[i] for i in p)] = x
    Bmid = ValuedStructure(A.signature, A.domain, vals)
    ident = {a: a for a in A.domain}
    de = edit_distance(A, Bmid, ident)
    if de > eps / C:
        raise AssertionError("internal error: edit distance above eps/C")
    om1, _ = edit_overcast(A, Bmid, ident)
    om1b, _ = edit_overcast(Bmid, A, ident)
    merged = merge_components(Bmid, prefix)
    forward = compose(om1, merged.forward)
    backward = compose(merged.backward, om1b)
    r = surrogate_factor(eps)
    if not overcast_verify(forward, A, rescale(merged.B, r)).ok:
        raise VerificationError("forward overcast failed")
    if not overcast_verify(backward, merged.B, rescale(A, r)).ok:
        raise VerificationError("backward overcast failed")
    bound = (class_bound(len(coords), eps1) * d + 1) if coords else 1
    return SizeReduction(merged.B, eps, r, forward, backward, merged.classes, bound,
                         {"edit_distance": de, "eps_rounding": eps1,
                          "rounding_classes": rounding.classes if rounding else 0})


# pack / unpack


def packed_name(name: str, I: Sequence[int]) -> str:
    return f"{name}[{','.join(str(i) for i in I)}]"


def packed_signature(sig: Signature) -> Signature:
    syms = []
    for name, ar in sig.symbols:
        for r in range(ar + 1):
            for I in itertools.combinations(range(1, ar + 1), r):
                syms.append((packed_name(name, I), ar - r))
    return Signature(tuple(syms))


def pack(A: ValuedStructure, v: str) -> ValuedStructure:
    """Structure on A - v over symbols (f, I): I records the 1-based positions that held v."""
    v = str(v)
    if v not in A:
        raise InvalidInput(f"{v!r} not in the domain")
    sig = packed_signature(A.signature)
    vals: dict[str, dict[tuple, Fraction]] = {n: {} for n in sig.names}
    for name, x, val in A.positive():
        I = tuple(i + 1 for i, a in enumerate(x) if a == v)
        vals[packed_name(name, I)][tuple(a for a in x if a != v)] = val
    return ValuedStructure(sig, [a for a in A.domain if a != v], vals)


def unpack(B: ValuedStructure, v: str, signature: Signature) -> ValuedStructure:
    """Inverse of pack: re-insert v at the recorded positions; v is added last to the domain."""
    v = str(v)
    if v in B:
        raise InvalidInput(f"{v!r} already in the domain")
    if B.signature != packed_signature(signature):
        raise InvalidInput("structure is not over the packed signature")
    vals: dict[str, dict[tuple, Fraction]] = {n: {} for n in signature.names}
    for name, ar in signature.symbols:
        for r in range(ar + 1):
            for I in itertools.combinations(range(1, ar + 1), r):
                for y, val in B.table(packed_name(name, I)).items():
                    it = iter(y)
                    x = tuple(v if i in I else next(it) for i in range(1, ar + 1))
                    vals[name][x] = val
    return ValuedStructure(signature, list(B.domain) + [v], vals)


def unpack_at(B: ValuedStructure, v: str, A: ValuedStructure) -> ValuedStructure:
    """unpack with v restored to its position in A's domain order when B is pack(A, v)."""
    U = unpack(B, v, A.signature)
    if set(U.domain) == set(A.domain):
        return ValuedStructure(U.signature, A.domain, U.values_dict())
    return U


def _extend(omega: Overcast, v: str) -> Overcast:
    return Overcast(({**g, v: v}, p) for g, p in omega)


# treedepth -> size


def _shrink(eps: Fraction) -> Fraction:
    """eta with (1+eta)^2 <= 1+eps."""
    return eps / (2 + eps)


def td_to_size(A: ValuedStructure, eps, _depth: int = 0) -> SizeReduction:
    """Bounded-size structure with verified overcasts both ways at factor r(eps).

    Connected: pack at a treedepth-reducing vertex, reduce, unpack (overcasts extend by v -> v,
    which transports coverage exactly). Disconnected: reduce each component at eta, then
    apply cc_to_size at eta, with (1+eta)^2 <= 1+eps.
    """
    eps = as_rational(eps)
    if eps <= 0:
        raise InvalidInput("eps must be positive")
    if _depth > 64:
        raise CapExceeded("treedepth recursion too deep")
    if not is_clean(A):
        raise InvalidInput("td_to_size needs a clean structure")
    comps = components(A)
    r = surrogate_factor(eps)
    if len(comps) == 1 and len(A.domain) == 1:
        ident = Overcast.identity(A)
        return SizeReduction(A, eps, r, ident, ident, 1, 1)
    if len(comps) == 1:
        G = gaifman(A)
        if G.n() > TD_EXACT_CAP:
            raise CapExceeded(f"component of {G.n()} elements exceeds the exact treedepth cap")
        v = treedepth_reducing_vertex(G)
        P = pack(A, v)
        sub = td_to_size(P, eps, _depth + 1)
        if v in sub.B:
            raise InvalidInput(f"element name {v!r} collides with reduced element names")
        B = unpack(sub.B, v, A.signature)
        fwd, bwd = _extend(sub.forward, v), _extend(sub.backward, v)
        if not overcast_verify(fwd, A, rescale(B, r)).ok or not overcast_verify(bwd, B, rescale(A, r)).ok:
            raise VerificationError("transported overcasts failed")
        return SizeReduction(B, eps, r, fwd, bwd, sub.classes, sub.bound_size + 1, {"packed_at": v})
    eta = _shrink(eps)
    parts, fwds, bwds = [], [], []
    for i, comp in enumerate(comps):
        S = A.restrict(comp)
        if not comp or len(comp) == 1:
            red = SizeReduction(S, eta, surrogate_factor(eta), Overcast.identity(S), Overcast.identity(S), 1, 1)
        else:
            red = td_to_size(S, eta, _depth + 1)
        tag = lambda a, i=i: f"p{_depth}_{i}.{a}"
        parts.append(red.B.relabel({b: tag(b) for b in red.B.domain}))
        fwds.append(Overcast(({a: tag(b) for a, b in g.items()}, p) for g, p in red.forward))
        bwds.append(Overcast(({tag(a): b for a, b in g.items()}, p) for g, p in red.backward))
    mid = _union(A.signature, parts, A)
    fwd1, bwd1 = couple(fwds), couple(bwds)
    outer = cc_to_size(mid, eta, prefix=f"t{_depth}_")
    fwd = compose(fwd1, outer.forward)
    bwd = compose(outer.backward, bwd1)
    if not overcast_verify(fwd, A, rescale(outer.B, r)).ok or not overcast_verify(bwd, outer.B, rescale(A, r)).ok:
        raise VerificationError("composed overcasts failed")
    return SizeReduction(outer.B, eps, r, fwd, bwd, outer.classes, outer.bound_size,
                         {"components": len(comps)})


def _union(sig: Signature, parts: list[ValuedStructure], A: ValuedStructure) -> ValuedStructure:
    """Union of element-disjoint parts; nullary values are taken once, from A."""
    dom: list[str] = []
    vals: dict[str, dict[tuple, Fraction]] = {n: {} for n in sig.names}
    for P in parts:
        dom.extend(P.domain)
        for name, x, v in P.positive():
            if x:
                vals[name][x] = v
    for name in sig.names:
        if sig.arity(name) == 0:
            vals[name] = dict(A.table(name))
    return ValuedStructure(sig, dom, vals)
