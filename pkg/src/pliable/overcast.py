"""Overcasts: distributions over maps A -> B whose expected pullback covers B.

Existence is decided by an LP with one column per map; when no overcast exists the LP dual
becomes a structure C on B's domain with opt(A, C) < opt(B, C).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Iterable, Mapping, Sequence

from .errors import CapExceeded, InvalidInput, VerificationError
from .exact import opt_bruteforce
from .lp import LinearProgram, solve_exact
from .rationals import as_rational, fmt, surrogate_factor
from .structures import ValuedStructure, _same_signature, edit_distance, is_clean, rescale

MAP_CAP = 10**5
COMPOSE_CAP = 10**6
UNIFORM_COLLAPSE_CAP = 4096


class Overcast:
    """Finite distribution over total maps, kept in canonical form."""

    def __init__(self, support: Iterable[tuple[Mapping[str, str], object]]):
        merged: dict[tuple, Fraction] = {}
        for g, p in support:
            p = as_rational(p)
            if p < 0:
                raise InvalidInput("negative probability")
            if p == 0:
                continue
            key = tuple(sorted((str(a), str(b)) for a, b in g.items()))
            merged[key] = merged.get(key, Fraction(0)) + p
        if not merged:
            raise InvalidInput("empty overcast support")
        if sum(merged.values()) != 1:
            raise InvalidInput(f"probabilities sum to {sum(merged.values())}, not 1")
        self.support: list[tuple[dict[str, str], Fraction]] = [
            (dict(k), p) for k, p in sorted(merged.items())
        ]

    def __len__(self):
        return len(self.support)

    def __iter__(self):
        return iter(self.support)

    def __eq__(self, other):
        return isinstance(other, Overcast) and self.support == other.support

    def __repr__(self):
        return f"Overcast(support={len(self.support)})"

    def to_json(self) -> list:
        return [{"map": dict(sorted(g.items())), "prob": fmt(p)} for g, p in self.support]

    @classmethod
    def from_json(cls, data: Sequence[Mapping]) -> "Overcast":
        try:
            return cls((row["map"], row["prob"]) for row in data)
        except (KeyError, TypeError) as exc:
            raise InvalidInput(f"malformed overcast JSON: {exc}") from exc

    @classmethod
    def identity(cls, A: ValuedStructure) -> "Overcast":
        return cls([({a: a for a in A.domain}, 1)])


@dataclass
class VerifyReport:
    ok: bool
    slack: dict[tuple[str, tuple], Fraction] = field(default_factory=dict)
    failures: list[tuple[str, tuple]] = field(default_factory=list)
    coverage: dict[tuple[str, tuple], Fraction] = field(default_factory=dict)

    def __bool__(self):
        return self.ok

    @property
    def min_slack(self) -> Fraction | None:
        return min(self.slack.values(), default=None)


def coverage(omega: Overcast, A: ValuedStructure) -> dict[tuple[str, tuple], Fraction]:
    """E_g f^A(g^{-1}(x)) for every image tuple x."""
    da = lcm(*[v.denominator for _, _, v in A.positive()], 1)
    a_tuples = [(name, x, int(v * da)) for name, x, v in A.positive()]
    by_prob: dict[Fraction, dict[tuple, int]] = {}
    for g, p in omega:
        acc = by_prob.setdefault(p, {})
        try:
            for name, x, v in a_tuples:
                key = (name, tuple(g[a] for a in x))
                acc[key] = acc.get(key, 0) + v
        except KeyError as exc:
            raise InvalidInput(f"support map undefined on {exc}") from exc
    out: dict[tuple, Fraction] = {}
    for p, acc in by_prob.items():
        for key, v in acc.items():
            out[key] = out.get(key, Fraction(0)) + p * v
    return {k: v / da for k, v in out.items()}


def overcast_verify(omega: Overcast, A: ValuedStructure, B: ValuedStructure) -> VerifyReport:
    """Exact coverage check of every positive tuple of B."""
    _same_signature(A, B)
    for g, _ in omega:
        if any(a not in g for a in A.domain) or any(g[a] not in B for a in A.domain):
            return VerifyReport(False, failures=[("<map>", tuple(sorted(g.items())))])
    cov = coverage(omega, A)
    slack, failures = {}, []
    for name, y, w in B.positive():
        s = cov.get((name, y), Fraction(0)) - w
        slack[(name, y)] = s
        if s < 0:
            failures.append((name, y))
    return VerifyReport(not failures, slack, failures, cov)


def measured_factor(omega: Overcast, A: ValuedStructure, B: ValuedStructure) -> Fraction | None:
    """Largest t with omega an overcast from A to t*B (None when B has no positive tuple)."""
    rep = overcast_verify(omega, A, rescale(B, 0))
    if not rep.ok:
        raise InvalidInput("support maps are not total maps into B")
    ratios = [rep.coverage.get((n, y), Fraction(0)) / w for n, y, w in B.positive()]
    return min(ratios) if ratios else None


@dataclass
class OvercastCertificate:
    """Structure C on B's domain (values = Farkas multipliers) with opt(A,C) < opt(B,C)."""

    C: ValuedStructure
    opt_A: Fraction
    opt_B: Fraction

    @property
    def gap(self) -> Fraction:
        return self.opt_B - self.opt_A

    def to_json(self) -> dict:
        return {"C": self.C.to_json(), "opt_A_C": fmt(self.opt_A), "opt_B_C": fmt(self.opt_B), "gap": fmt(self.gap)}


def _all_maps(A: ValuedStructure, B: ValuedStructure, cap: int):
    n = len(B.domain) ** len(A.domain)
    if n > cap:
        raise CapExceeded(f"{len(B.domain)}^{len(A.domain)} = {n} maps exceed the cap {cap}")
    for t in itertools.product(B.domain, repeat=len(A.domain)):
        yield dict(zip(A.domain, t))


@dataclass
class FactorResult:
    """Largest t with A >= t*B, an overcast attaining it, and the dual structure."""

    factor: Fraction | None  # None: B has no positive tuple, any factor works
    overcast: Overcast
    dual: ValuedStructure | None


def best_factor(A: ValuedStructure, B: ValuedStructure, cap: int = MAP_CAP) -> FactorResult:
    """max t s.t. some distribution over maps covers t*B; exact LP over all maps."""
    _same_signature(A, B)
    rows = [(name, y, w) for name, y, w in B.positive()]
    maps = list(_all_maps(A, B, cap))
    if not rows:
        return FactorResult(None, Overcast([(maps[0], 1)]), None)
    row_index = {(name, y): i for i, (name, y, _) in enumerate(rows)}
    a_tuples = list(A.positive())
    lp = LinearProgram()
    cols = [lp.add_var(f"g{j}") for j in range(len(maps))]
    t = lp.add_var("t", nonneg=False)
    coeffs: list[dict[str, Fraction]] = [{} for _ in rows]
    for j, g in enumerate(maps):
        for name, x, v in a_tuples:
            i = row_index.get((name, tuple(g[a] for a in x)))
            if i is not None:
                coeffs[i][cols[j]] = coeffs[i].get(cols[j], Fraction(0)) + v
    for i, (name, y, w) in enumerate(rows):
        c = dict(coeffs[i])
        c[t] = -w
        lp.add_constraint(c, ">=", 0)
    lp.add_constraint({c: 1 for c in cols}, "=", 1)
    lp.set_objective({t: 1}, "max")
    out = solve_exact(lp)
    if out.status != "optimal":
        raise VerificationError(f"overcast LP returned {out.status}")
    omega = Overcast((maps[j], out.primal[c]) for j, c in enumerate(cols) if out.primal[c] > 0)
    u = [-q for q in out.dual[: len(rows)]]
    vals: dict[str, dict[tuple, Fraction]] = {}
    for (name, y, _), q in zip(rows, u):
        if q > 0:
            vals.setdefault(name, {})[y] = q
    dual = ValuedStructure(B.signature, B.domain, vals)
    return FactorResult(out.value, omega, dual)


def overcast_find(A: ValuedStructure, B: ValuedStructure, cap: int = MAP_CAP,
                  opt_cap: int = 10**6) -> Overcast | OvercastCertificate:
    """A verified overcast A -> B, or a verified certificate structure C."""
    res = best_factor(A, B, cap)
    if res.factor is None or res.factor >= 1:
        if not overcast_verify(res.overcast, A, B).ok:
            raise AssertionError("internal error: LP overcast failed verification")
        return res.overcast
    C = res.dual
    oa = opt_bruteforce(A, C, opt_cap).value
    ob = opt_bruteforce(B, C, opt_cap).value
    if not oa < ob:
        raise AssertionError("internal error: certificate structure does not separate")
    return OvercastCertificate(C, oa, ob)


def compose(omega1: Overcast, omega2: Overcast, cap: int = COMPOSE_CAP) -> Overcast:
    """Distribution of g2 o g1 with g1 ~ omega1, g2 ~ omega2 independent."""
    if len(omega1) * len(omega2) > cap:
        raise CapExceeded(f"composed support {len(omega1) * len(omega2)} exceeds the cap {cap}")
    out = []
    for g1, p1 in omega1:
        for g2, p2 in omega2:
            try:
                out.append(({a: g2[b] for a, b in g1.items()}, p1 * p2))
            except KeyError as exc:
                raise InvalidInput(f"maps do not chain at {exc}") from exc
    return Overcast(out)


@dataclass
class OptDistanceBound:
    epsilon: Fraction
    factor: Fraction
    forward: Overcast  # A -> factor * B
    backward: Overcast  # B -> factor * A

    def to_json(self) -> dict:
        return {
            "epsilon": fmt(self.epsilon),
            "factor": fmt(self.factor),
            "forward": self.forward.to_json(),
            "backward": self.backward.to_json(),
        }


def opt_distance_bound(A: ValuedStructure, B: ValuedStructure, epsilons: Sequence,
                       cap: int = MAP_CAP) -> dict:
    """For each eps decide A >= r(eps) B and B >= r(eps) A with r(eps) = 1/(1+eps).

    Both best factors are computed exactly once; eps is accepted iff r(eps) is at most both.
    Returns per-eps acceptance and the least accepted bound with verified witnesses.
    """
    fwd = best_factor(A, B, cap)
    bwd = best_factor(B, A, cap)
    per_eps = {}
    least = None
    for eps in sorted(as_rational(e) for e in epsilons):
        r = surrogate_factor(eps)
        ok = (fwd.factor is None or fwd.factor >= r) and (bwd.factor is None or bwd.factor >= r)
        per_eps[eps] = ok
        if ok and least is None:
            if not overcast_verify(fwd.overcast, A, rescale(B, r)).ok:
                raise AssertionError("internal error: forward witness failed verification")
            if not overcast_verify(bwd.overcast, B, rescale(A, r)).ok:
                raise AssertionError("internal error: backward witness failed verification")
            least = OptDistanceBound(eps, r, fwd.overcast, bwd.overcast)
    return {
        "accepted": per_eps,
        "least": least,
        "forward_factor": fwd.factor,
        "backward_factor": bwd.factor,
    }


# edit-distance overcast


def _derandomized_collapse(A: ValuedStructure, name: str, x: tuple) -> dict[str, str]:
    """A map A -> set(x) with sum of f^A over tuples sent onto x at least ||A_f|| / r^r.

    Conditional expectations over a uniformly random map into the entries of x.
    """
    r = len(x)
    tuples = [(y, v) for m, y, v in A.positive() if m == name]
    fixed: dict[str, int] = {}

    def expectation() -> Fraction:
        total = Fraction(0)
        for y, v in tuples:
            p = Fraction(1)
            for i, a in enumerate(y):
                if a in fixed:
                    if fixed[a] != i:
                        p = Fraction(0)
                        break
                else:
                    p /= r
            total += v * p
        return total

    for a in A.domain:
        best, best_i = None, 0
        for i in range(r):
            fixed[a] = i
            e = expectation()
            if best is None or e > best:
                best, best_i = e, i
        fixed[a] = best_i
    return {a: x[i] for a, i in fixed.items()}


def edit_overcast(A: ValuedStructure, B: ValuedStructure, phi: Mapping[str, str] | None = None,
                  collapse: str = "auto") -> tuple[Overcast, Fraction]:
    """Overcast A -> (1-delta) B built from a bijection phi and per-tuple collapses.

    delta = C*d/(1+C*d) with d the edit distance under phi and C = max ar^ar. With
    probability 1-delta the map is phi; the remaining mass is spread over tuples x of B in
    proportion to their edit contribution, and for each such x all of A is mapped into the
    entries of x, uniformly at random ("uniform") or by the derandomized choice of a single
    map with at least the uniform expectation ("derandomized"). Returns (omega, delta).
    """
    _same_signature(A, B)
    if not (is_clean(A) and is_clean(B)):
        raise InvalidInput("edit_overcast needs clean structures")
    if len(A) != len(B):
        raise InvalidInput("domains differ in size")
    if phi is None:
        if len(A) > 8:
            raise CapExceeded("supply phi for domains above 8 elements")
        best = None
        for perm in itertools.permutations(B.domain):
            cand = dict(zip(A.domain, perm))
            d = edit_distance(A, B, cand)
            if best is None or d < best[0]:
                best = (d, cand)
        phi = best[1]
    phi = {a: phi[a] for a in A.domain}
    d = edit_distance(A, B, phi)
    if d == 0:
        return Overcast([(phi, 1)]), Fraction(0)
    C = A.signature.c_sigma
    delta = C * d / (1 + C * d)
    support: list[tuple[dict[str, str], Fraction]] = [(phi, 1 - delta)]
    inv = {b: a for a, b in phi.items()}
    for name in A.signature.names:
        na, nb = A.norm1(name), B.norm1(name)
        if na == 0 and nb == 0:
            continue
        denom = min(na, nb)
        ta, tb = A.table(name), B.table(name)
        keys = set(tb) | {tuple(phi[a] for a in y) for y in ta}
        for x in sorted(keys, key=lambda y: tuple(B.index(b) for b in y)):
            diff = abs(tb.get(x, 0) - ta.get(tuple(inv[b] for b in x), 0))
            if not diff:
                continue
            weight = delta * diff / denom / d
            r = len(x)
            mode = collapse
            if mode == "auto":
                mode = "uniform" if r ** len(A) <= UNIFORM_COLLAPSE_CAP else "derandomized"
            if mode == "uniform":
                maps = list(itertools.product(x, repeat=len(A)))
                for t in maps:
                    support.append((dict(zip(A.domain, t)), weight / len(maps)))
            elif mode == "derandomized":
                support.append((_derandomized_collapse(A, name, x), weight))
            else:
                raise InvalidInput(f"unknown collapse mode {collapse!r}")
    return Overcast(support), delta


def couple(omegas: Sequence[Overcast]) -> Overcast:
    """Joint distribution of overcasts on disjoint domains with the given marginals.

    Uses the quantile coupling, so the support has at most sum(len) - len + 1 maps. Coverage
    is linear in each marginal, so the union of maps covers the union of targets.
    """
    cuts = sorted({Fraction(0), Fraction(1)} | {
        sum((p for _, p in om.support[: i + 1]), Fraction(0)) for om in omegas for i in range(len(om))})
    out = []
    for lo, hi in zip(cuts, cuts[1:]):
        joint: dict[str, str] = {}
        for om in omegas:
            acc = Fraction(0)
            for g, p in om.support:
                acc += p
                if lo < acc:
                    break
            if set(joint) & set(g):
                raise InvalidInput("coupled overcasts must have disjoint domains")
            joint.update(g)
        out.append((joint, hi - lo))
    return Overcast(out)
