"""Approximation drivers: a certified value bracket from a bounded-treewidth witness, and a
constructive scheme over an explicit vertex modulator."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import InvalidInput, VerificationError
from .exact import opt_treedec
from .fragility import FractionalModulator
from .graphs import best_decomposition
from .overcast import Overcast, measured_factor
from .rationals import as_rational, fmt, surrogate_factor
from .relax import opt_sa
from .structures import ValuedStructure, _same_signature, gaifman, val


@dataclass
class PtasReport:
    lower: Fraction
    upper: Fraction | None
    ratio: Fraction | None  # certified upper/lower bound on opt-ratio
    level: int | None
    witness: dict[str, str] | None = None
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "lower": fmt(self.lower),
            "upper": fmt(self.upper) if self.upper is not None else None,
            "ratio": fmt(self.ratio) if self.ratio is not None else None,
            "level": self.level,
        }
        if self.witness is not None:
            out["witness"] = self.witness
        out["details"] = {k: (fmt(v) if isinstance(v, Fraction) else v) for k, v in self.details.items()}
        return out


def ptas_value(A: ValuedStructure, C: ValuedStructure, eps, B: ValuedStructure, omega: Overcast,
               omega_back: Overcast, method: str = "auto") -> PtasReport:
    """Bracket opt(A, C) with the Sherali-Adams value at level tw(B)+1.

    With omega: A -> rho1*B and omega_back: B -> rho2*A (measured exactly, both at least
    r(eps)), the relaxation is exact on B, so opt <= SA(A) <= opt/(rho1*rho2) <= (1+eps)^2 opt.
    """
    eps = as_rational(eps)
    _same_signature(A, C)
    _same_signature(A, B)
    r = surrogate_factor(eps)
    rho1 = measured_factor(omega, A, B)
    rho2 = measured_factor(omega_back, B, A)
    rho1 = Fraction(1) if rho1 is None else min(rho1, Fraction(1))
    rho2 = Fraction(1) if rho2 is None else min(rho2, Fraction(1))
    if rho1 < r or rho2 < r:
        raise VerificationError(f"witness factors {rho1}, {rho2} fall below r(eps) = {r}")
    T, exact = best_decomposition(gaifman(B))
    tw = max(T.width, 0)
    level = max(tw + 1, A.signature.max_arity, 1)
    upper = opt_sa(A, C, level, method)
    factor = rho1 * rho2
    lower = upper * factor
    return PtasReport(lower, upper, 1 / factor, level,
                      details={"rho_forward": rho1, "rho_backward": rho2, "tw_B": tw, "tw_exact": exact,
                               "ratio_bound": (1 + eps) ** 2})


def ptas_constructive(A: ValuedStructure, C: ValuedStructure, modulator: FractionalModulator,
                      r: int | None = None) -> PtasReport:
    """Solve A - X exactly for every X in the support, extend greedily, keep the best.

    Averaging over X shows some residual optimum keeps at least (1 - r*thinness) of opt, so
    the returned value is certified within that factor; the greedy extension only adds.
    """
    _same_signature(A, C)
    if modulator.kind != "vertex":
        raise InvalidInput("constructive mode needs a vertex modulator")
    if list(modulator.graph.vertices) != list(A.domain):
        raise InvalidInput("modulator graph does not match the structure's domain")
    r = A.signature.max_arity if r is None else int(r)
    a_tuples = list(A.positive())
    best, per_set = None, []
    for X, p in modulator.support:
        keep = [a for a in A.domain if a not in X]
        h: dict[str, str] = {}
        if keep:
            h.update(opt_treedec(A.restrict(keep), C).witness)
        for a in A.domain:
            if a in h:
                continue
            scores = []
            for c in C.domain:
                h[a] = c
                s = sum((v * C.value(n, tuple(h[b] for b in x)) for n, x, v in a_tuples
                         if a in x and all(b in h for b in x)), Fraction(0))
                scores.append((s, -C.index(c), c))
            h[a] = max(scores)[2]
        value = val(A, C, h)
        per_set.append(value)
        if best is None or value > best[0]:
            best = (value, dict(h))
    factor = max(Fraction(0), 1 - r * modulator.thinness)
    lower, witness = best
    upper = lower / factor if factor > 0 else None
    return PtasReport(lower, upper, (1 / factor) if factor > 0 else None, None, witness,
                      {"guarantee_factor": factor, "per_set": [fmt(v) for v in per_set]})
