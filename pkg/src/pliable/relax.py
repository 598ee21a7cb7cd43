"""The level-k Sherali-Adams relaxation of opt(A, B)."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import CapExceeded, InvalidInput, VerificationError
from .exact import opt_bruteforce, opt_treedec
from .graphs import best_decomposition
from .lp import LinearProgram, solve
from .structures import ValuedStructure, _same_signature, gaifman

SA_VARIABLE_CAP = 2 * 10**5


def _var(X: tuple[int, ...], s: tuple[int, ...]) -> str:
    return "L" + ",".join(map(str, X)) + "|" + ",".join(map(str, s))


def _sets(n: int, k: int) -> list[tuple[int, ...]]:
    """Nonempty subsets of range(n) of size <= k in colexicographic order."""
    out = [X for r in range(1, k + 1) for X in itertools.combinations(range(n), r)]
    out.sort(key=lambda X: (tuple(reversed(X)), len(X)))
    return out


@dataclass
class SAInstance:
    A: ValuedStructure
    B: ValuedStructure
    k: int
    lp: LinearProgram
    index: dict[tuple[tuple[int, ...], tuple[int, ...]], str] = field(default_factory=dict)

    def variable(self, X: tuple[str, ...], s: tuple[str, ...]) -> str:
        pairs = sorted(zip((self.A.index(a) for a in X), (self.B.index(b) for b in s)))
        return self.index[(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))]


def sa_variable_count(nA: int, nB: int, k: int) -> int:
    from math import comb

    return sum(comb(nA, r) * nB**r for r in range(1, min(k, nA) + 1))


def build_sa(A: ValuedStructure, B: ValuedStructure, k: int, full_marginals: bool = False,
             cap: int = SA_VARIABLE_CAP) -> SAInstance:
    """LP with variables lambda(X, s) for |X| <= k, s: X -> B.

    Marginalization is imposed between X and every superset Y with one more element;
    chaining these is equivalent to imposing it for all X subset Y (pass
    full_marginals=True for the literal family).
    """
    _same_signature(A, B)
    if k < A.signature.max_arity:
        raise InvalidInput(f"level {k} is below the maximum arity {A.signature.max_arity}")
    nA, nB = len(A.domain), len(B.domain)
    k_eff = min(k, nA)
    count = sa_variable_count(nA, nB, k_eff)
    if count > cap:
        raise CapExceeded(f"Sherali-Adams level {k} needs {count} variables (cap {cap})")
    lp = LinearProgram()
    index = {}
    sets = _sets(nA, k_eff)
    for X in sets:
        for s in itertools.product(range(nB), repeat=len(X)):
            index[(X, s)] = lp.add_var(_var(X, s))
    # marginalization
    for Y in sets:
        if len(Y) < 2:
            continue
        subsets = (
            [X for r in range(1, len(Y)) for X in itertools.combinations(Y, r)]
            if full_marginals
            else [tuple(a for a in Y if a != y) for y in Y]
        )
        for X in subsets:
            pos = [Y.index(a) for a in X]
            groups: dict[tuple, list[str]] = {}
            for t in itertools.product(range(nB), repeat=len(Y)):
                groups.setdefault(tuple(t[p] for p in pos), []).append(index[(Y, t)])
            for s in itertools.product(range(nB), repeat=len(X)):
                coeffs = {index[(X, s)]: 1}
                for name in groups[s]:
                    coeffs[name] = coeffs.get(name, 0) - 1
                lp.add_constraint(coeffs, "=", 0)
    # normalization
    for X in sets:
        lp.add_constraint({index[(X, s)]: 1 for s in itertools.product(range(nB), repeat=len(X))}, "=", 1)
    # objective
    obj: dict[str, Fraction] = {}
    constant = Fraction(0)
    for name, x, v in A.positive():
        if not x:
            constant += v * B.value(name, ())
            continue
        X = tuple(sorted({A.index(a) for a in x}))
        pos = [X.index(A.index(a)) for a in x]
        tab = B.table(name)
        for s in itertools.product(range(nB), repeat=len(X)):
            w = tab.get(tuple(B.domain[s[p]] for p in pos))
            if w:
                var = index[(X, s)]
                obj[var] = obj.get(var, Fraction(0)) + v * w
    lp.set_objective(obj, "max", constant)
    return SAInstance(A, B, k, lp, index)


def integral_point(inst: SAInstance, h) -> dict[str, Fraction]:
    """The SA solution induced by a single assignment h (point masses on every X)."""
    x = {v: Fraction(0) for v in inst.lp.variables}
    hi = [inst.B.index(h[a]) for a in inst.A.domain]
    for (X, s), v in inst.index.items():
        if all(hi[a] == b for a, b in zip(X, s)):
            x[v] = Fraction(1)
    return x


def _best_assignment(A: ValuedStructure, B: ValuedStructure):
    try:
        if len(B.domain) ** len(A.domain) <= 10**5:
            return opt_bruteforce(A, B).witness
        return opt_treedec(A, B).witness
    except CapExceeded:
        return None


def opt_sa(A: ValuedStructure, B: ValuedStructure, k: int, method: str = "auto") -> Fraction:
    """Optimal value of the level-k relaxation, exact.

    Large programs go through the guided solver; an optimal assignment of opt(A, B), when
    affordable, is offered as a primal candidate since the relaxation is often tight.
    """
    inst = build_sa(A, B, k)
    hints = []
    m, n = inst.lp.size()
    if method != "exact" and m * (m + n) > 400_000:
        h = _best_assignment(A, B)
        if h is not None:
            hints.append(integral_point(inst, h))
    out = solve(inst.lp, method, hints)
    if out.status != "optimal":
        raise VerificationError(f"Sherali-Adams LP returned {out.status}")
    return out.value


def sa_exactness_check(A: ValuedStructure, B: ValuedStructure) -> dict:
    """Compare opt_sa with opt for levels from the maximum arity up to tw(A)+1."""
    _same_signature(A, B)
    T, exact_tw = best_decomposition(gaifman(A))
    tw = max(T.width, 0)
    exact = opt_bruteforce(A, B).value if len(B.domain) ** len(A.domain) <= 10**6 else opt_treedec(A, B, T).value
    start = max(A.signature.max_arity, 1)
    top = max(start, tw + 1)
    levels = {}
    least = None
    for k in range(start, top + 1):
        v = opt_sa(A, B, k)
        levels[k] = v
        if least is None and v == exact:
            least = k
    return {
        "opt": exact,
        "treewidth": tw,
        "treewidth_exact": exact_tw,
        "levels": levels,
        "exact_at_tw_plus_one": levels[top] == exact,
        "least_exact_level": least,
    }


def sa_dominance_check(A: ValuedStructure, B: ValuedStructure, k: int, C_samples, omega) -> bool:
    """With a verified overcast A -> B, check opt_sa(A,C,k) >= opt_sa(B,C,k) on every sample C."""
    from .overcast import overcast_verify

    if not overcast_verify(omega, A, B).ok:
        raise VerificationError("supplied overcast does not verify")
    for C in C_samples:
        if opt_sa(A, C, k) < opt_sa(B, C, k):
            return False
    return True
