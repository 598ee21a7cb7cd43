"""Exact rational linear programming.

The core engine is a dense-tableau two-phase simplex over Fractions with Bland's rule.
Optimal outcomes carry an optimal dual; infeasible outcomes carry a Farkas certificate.
Large programs may be routed through a floating-point solver whose answer is only used
as a guess: it is rationalized and accepted solely after exact primal/dual verification.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import CapExceeded, InvalidInput
from .rationals import as_rational, fmt

RELATIONS = ("<=", "=", ">=")
EXACT_TABLEAU_CAP = 400_000  # rows x columns handled by the plain tableau in "auto" mode


@dataclass
class Constraint:
    coeffs: dict[str, Fraction]
    rel: str
    rhs: Fraction


class LinearProgram:
    """Named variables, sparse rows, an objective with sense max/min/feasibility."""

    def __init__(self):
        self.variables: list[str] = []
        self.nonneg: dict[str, bool] = {}
        self.objective: dict[str, Fraction] = {}
        self.objective_constant = Fraction(0)
        self.sense = "feasibility"
        self.constraints: list[Constraint] = []
        self._names: set[str] = set()

    def add_var(self, name: str, nonneg: bool = True) -> str:
        if name in self._names:
            raise InvalidInput(f"duplicate variable {name!r}")
        self._names.add(name)
        self.variables.append(name)
        self.nonneg[name] = nonneg
        return name

    def add_constraint(self, coeffs: Mapping[str, object], rel: str, rhs) -> int:
        if rel not in RELATIONS:
            raise InvalidInput(f"bad relation {rel!r}")
        row = {}
        for v, c in coeffs.items():
            if v not in self._names:
                raise InvalidInput(f"undeclared variable {v!r}")
            c = as_rational(c)
            if c:
                row[v] = row.get(v, Fraction(0)) + c
        self.constraints.append(Constraint(row, rel, as_rational(rhs)))
        return len(self.constraints) - 1

    def set_objective(self, coeffs: Mapping[str, object], sense: str = "max", constant=0):
        if sense not in ("max", "min", "feasibility"):
            raise InvalidInput(f"bad sense {sense!r}")
        obj = {}
        for v, c in coeffs.items():
            if v not in self._names:
                raise InvalidInput(f"undeclared variable {v!r}")
            c = as_rational(c)
            if c:
                obj[v] = obj.get(v, Fraction(0)) + c
        self.objective = obj
        self.sense = sense
        self.objective_constant = as_rational(constant)

    def size(self) -> tuple[int, int]:
        return len(self.constraints), len(self.variables)

    def evaluate(self, x: Mapping[str, Fraction]) -> Fraction:
        return self.objective_constant + sum((c * x.get(v, 0) for v, c in self.objective.items()), Fraction(0))

    def violations(self, x: Mapping[str, Fraction]) -> list[int]:
        bad = []
        for v in self.variables:
            if self.nonneg[v] and x.get(v, 0) < 0:
                bad.append(-1)
        for i, con in enumerate(self.constraints):
            lhs = sum((c * x.get(v, 0) for v, c in con.coeffs.items()), Fraction(0))
            if (con.rel == "<=" and lhs > con.rhs) or (con.rel == ">=" and lhs < con.rhs) or (
                con.rel == "=" and lhs != con.rhs
            ):
                bad.append(i)
        return bad

    # JSON

    def to_json(self) -> dict:
        return {
            "variables": [{"name": v, "nonneg": self.nonneg[v]} for v in self.variables],
            "objective": {
                "sense": self.sense,
                "coeffs": {v: fmt(c) for v, c in self.objective.items()},
                "constant": fmt(self.objective_constant),
            },
            "constraints": [
                {"coeffs": {v: fmt(c) for v, c in con.coeffs.items()}, "rel": con.rel, "rhs": fmt(con.rhs)}
                for con in self.constraints
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "LinearProgram":
        lp = cls()
        try:
            for v in data["variables"]:
                if isinstance(v, str):
                    lp.add_var(v)
                else:
                    lp.add_var(v["name"], v.get("nonneg", True))
            for con in data.get("constraints", []):
                lp.add_constraint(con["coeffs"], con["rel"], con["rhs"])
            obj = data.get("objective", {"sense": "feasibility", "coeffs": {}})
            lp.set_objective(obj.get("coeffs", {}), obj.get("sense", "max"), obj.get("constant", 0))
        except (KeyError, TypeError) as exc:
            raise InvalidInput(f"malformed LP JSON: {exc}") from exc
        return lp


@dataclass
class FarkasCertificate:
    """Multipliers y on the rows written in <=-form (>= rows negated).

    y >= 0 on inequality rows, free on equalities; y^T A >= 0 on nonnegative columns,
    = 0 on free columns; y^T b < 0. No feasible point can exist.
    """

    y: list[Fraction]


@dataclass
class LPOutcome:
    status: str  # optimal | infeasible | unbounded
    value: Fraction | None = None
    primal: dict[str, Fraction] | None = None
    dual: list[Fraction] | None = None
    certificate: FarkasCertificate | None = None
    method: str = "exact"

    def to_json(self) -> dict:
        out: dict = {"status": self.status, "method": self.method}
        if self.value is not None:
            out["value"] = fmt(self.value)
        if self.primal is not None:
            out["primal"] = {v: fmt(q) for v, q in self.primal.items()}
        if self.dual is not None:
            out["dual"] = [fmt(q) for q in self.dual]
        if self.certificate is not None:
            out["certificate"] = [fmt(q) for q in self.certificate.y]
        return out


def _le_form(con: Constraint) -> tuple[dict[str, Fraction], Fraction]:
    if con.rel == ">=":
        return {v: -c for v, c in con.coeffs.items()}, -con.rhs
    return con.coeffs, con.rhs


def verify_farkas(lp: LinearProgram, cert: FarkasCertificate) -> bool:
    y = cert.y
    if len(y) != len(lp.constraints):
        return False
    acc: dict[str, Fraction] = {}
    rhs = Fraction(0)
    for yi, con in zip(y, lp.constraints):
        if con.rel != "=" and yi < 0:
            return False
        if not yi:
            continue
        row, b = _le_form(con)
        rhs += yi * b
        for v, c in row.items():
            acc[v] = acc.get(v, Fraction(0)) + yi * c
    for v in lp.variables:
        a = acc.get(v, Fraction(0))
        if lp.nonneg[v] and a < 0:
            return False
        if not lp.nonneg[v] and a != 0:
            return False
    return rhs < 0


def verify_optimal(lp: LinearProgram, x: Mapping[str, Fraction], y: Sequence[Fraction]) -> bool:
    """Exact primal feasibility, dual feasibility and equal objectives."""
    if lp.violations(x):
        return False
    if lp.sense == "feasibility":
        return True
    sign = 1 if lp.sense == "max" else -1
    # work in max form: y' = sign * y
    acc: dict[str, Fraction] = {}
    by = Fraction(0)
    for yi, con in zip(y, lp.constraints):
        yp = sign * yi
        if con.rel == "<=" and yp < 0:
            return False
        if con.rel == ">=" and yp > 0:
            return False
        if not yp:
            continue
        by += yp * con.rhs
        for v, c in con.coeffs.items():
            acc[v] = acc.get(v, Fraction(0)) + yp * c
    for v in lp.variables:
        cj = sign * lp.objective.get(v, Fraction(0))
        a = acc.get(v, Fraction(0))
        if lp.nonneg[v] and a < cj:
            return False
        if not lp.nonneg[v] and a != cj:
            return False
    primal = sign * (lp.evaluate(x) - lp.objective_constant)
    return by == primal


# tableau simplex


class _Tableau:
    def __init__(self, rows: list[list[Fraction]], rhs: list[Fraction], ncols: int):
        self.m = len(rows)
        self.ncols = ncols  # structural + slack columns; artificials follow
        self.T = [rows[i] + [Fraction(int(i == j)) for j in range(self.m)] + [rhs[i]] for i in range(self.m)]
        self.basis = [ncols + i for i in range(self.m)]
        self.width = ncols + self.m

    def pivot(self, r: int, c: int):
        T = self.T
        prow = T[r]
        p = prow[c]
        if p != 1:
            inv = 1 / p
            for j in range(self.width + 1):
                if prow[j]:
                    prow[j] *= inv
        nz = [j for j in range(self.width + 1) if prow[j]]
        for i in range(self.m):
            if i == r:
                continue
            row = T[i]
            f = row[c]
            if f:
                for j in nz:
                    row[j] -= f * prow[j]
        obj = self.obj
        f = obj[c]
        if f:
            for j in nz:
                obj[j] -= f * prow[j]
        self.basis[r] = c

    def set_objective(self, cost: list[Fraction]):
        # reduced-cost row: obj[j] = c_j - c_B B^{-1} A_j, last entry = -c_B B^{-1} b
        obj = list(cost) + [Fraction(0)]
        for i, b in enumerate(self.basis):
            cb = cost[b]
            if cb:
                row = self.T[i]
                for j in range(self.width + 1):
                    if row[j]:
                        obj[j] -= cb * row[j]
        self.obj = obj

    def run(self, allowed: int) -> str:
        """Maximize with Bland's rule over columns < allowed; returns optimal or unbounded."""
        T = self.T
        while True:
            c = next((j for j in range(allowed) if self.obj[j] > 0), None)
            if c is None:
                return "optimal"
            best = None
            for i in range(self.m):
                a = T[i][c]
                if a > 0:
                    ratio = T[i][-1] / a
                    key = (ratio, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return "unbounded"
            self.pivot(best[1], c)


def solve_exact(lp: LinearProgram) -> LPOutcome:
    """Two-phase tableau simplex in exact arithmetic."""
    cols: list[tuple[str, int]] = []  # (variable, sign)
    for v in lp.variables:
        cols.append((v, 1))
        if not lp.nonneg[v]:
            cols.append((v, -1))
    nstruct = len(cols)
    m = len(lp.constraints)
    nslack = sum(1 for con in lp.constraints if con.rel != "=")
    ncols = nstruct + nslack
    colpos: dict[str, list[tuple[int, int]]] = {}
    for j, (v, s) in enumerate(cols):
        colpos.setdefault(v, []).append((j, s))
    rows, rhs, flips = [], [], []
    k = nstruct
    for con in lp.constraints:
        row = [Fraction(0)] * ncols
        for v, c in con.coeffs.items():
            for j, s in colpos[v]:
                row[j] = s * c
        if con.rel == "<=":
            row[k] = Fraction(1)
            k += 1
        elif con.rel == ">=":
            row[k] = Fraction(-1)
            k += 1
        b = con.rhs
        flip = 1
        if b < 0:
            row = [-a for a in row]
            b = -b
            flip = -1
        rows.append(row)
        rhs.append(b)
        flips.append(flip)
    tab = _Tableau(rows, rhs, ncols)
    # phase 1: maximize -sum(artificials)
    tab.set_objective([Fraction(0)] * ncols + [Fraction(-1)] * m)
    tab.run(tab.width)
    if tab.obj[-1] != 0:
        # phase-1 duals (artificial cost -1): y_s^T A_s >= 0 on real columns, y_s^T b_s < 0
        ys = [-1 - tab.obj[ncols + i] for i in range(m)]
        y = [flips[i] * ys[i] for i in range(m)]
        cert = FarkasCertificate([(-yi if con.rel == ">=" else yi) for yi, con in zip(y, lp.constraints)])
        if not verify_farkas(lp, cert):
            raise AssertionError("internal error: Farkas certificate failed verification")
        return LPOutcome("infeasible", certificate=cert)
    # drive zero-level artificials out of the basis where possible
    for r in range(m):
        if tab.basis[r] >= ncols:
            c = next((j for j in range(ncols) if tab.T[r][j] != 0), None)
            if c is not None:
                tab.pivot(r, c)
    if lp.sense == "feasibility":
        x = _extract(tab, cols, lp)
        return LPOutcome("optimal", value=Fraction(0), primal=x, dual=[Fraction(0)] * m)
    sign = 1 if lp.sense == "max" else -1
    cost = [Fraction(0)] * (ncols + m)
    for j, (v, s) in enumerate(cols):
        cost[j] = sign * s * lp.objective.get(v, Fraction(0))
    tab.set_objective(cost)
    status = tab.run(ncols)
    if status == "unbounded":
        return LPOutcome("unbounded")
    x = _extract(tab, cols, lp)
    ys = [-tab.obj[ncols + i] for i in range(m)]
    y = [sign * flips[i] * ys[i] for i in range(m)]
    out = LPOutcome("optimal", value=lp.evaluate(x), primal=x, dual=y)
    return out


def _extract(tab: _Tableau, cols, lp: LinearProgram) -> dict[str, Fraction]:
    x = {v: Fraction(0) for v in lp.variables}
    for r, b in enumerate(tab.basis):
        if b < len(cols):
            v, s = cols[b]
            x[v] += s * tab.T[r][-1]
    return x


# floating-point guided path


def _rationalize(values, caps=(10**3, 10**5, 10**8)):
    for cap in caps:
        yield [Fraction(float(v)).limit_denominator(cap) for v in values]


def solve_guided(lp: LinearProgram, primal_hints: Sequence[Mapping[str, Fraction]] = ()) -> LPOutcome | None:
    """Solve with HiGHS and accept a rationalized answer only if it verifies exactly.

    The floating-point dual is rationalized and checked for exact dual feasibility, giving a
    certified bound. Candidate primal points (the rationalized float primal and any caller
    hints) are checked for exact feasibility; when one attains the dual bound both are
    optimal. Returns None when no certified pair is found.
    """
    import numpy as np
    from scipy.optimize import linprog
    from scipy.sparse import csr_matrix

    if lp.sense == "feasibility":
        return None
    idx = {v: j for j, v in enumerate(lp.variables)}
    n = len(lp.variables)
    sign = 1 if lp.sense == "max" else -1
    c = np.zeros(n)
    for v, q in lp.objective.items():
        c[idx[v]] = -sign * float(q)
    ub_rows, eq_rows = [], []
    for i, con in enumerate(lp.constraints):
        (eq_rows if con.rel == "=" else ub_rows).append(i)

    def mat(rows, negate_ge):
        data, ri, ci, b = [], [], [], []
        for k, i in enumerate(rows):
            con = lp.constraints[i]
            s = -1 if (negate_ge and con.rel == ">=") else 1
            for v, q in con.coeffs.items():
                data.append(s * float(q))
                ri.append(k)
                ci.append(idx[v])
            b.append(s * float(con.rhs))
        return csr_matrix((data, (ri, ci)), shape=(len(rows), n)), np.array(b)

    kw = {}
    if ub_rows:
        kw["A_ub"], kw["b_ub"] = mat(ub_rows, True)
    if eq_rows:
        kw["A_eq"], kw["b_eq"] = mat(eq_rows, False)
    bounds = [(0, None) if lp.nonneg[v] else (None, None) for v in lp.variables]
    res = linprog(c, bounds=bounds, method="highs-ipm", **kw)
    if res.status != 0:
        return None
    z = [0.0] * len(lp.constraints)
    if ub_rows:
        for k, i in enumerate(ub_rows):
            mk = res.ineqlin.marginals[k]
            z[i] = -mk if lp.constraints[i].rel == "<=" else mk
    if eq_rows:
        for k, i in enumerate(eq_rows):
            z[i] = -res.eqlin.marginals[k]
    dual = None
    for ys in _rationalize(z):
        y = [sign * q for q in ys]
        bound = _dual_bound(lp, y)
        if bound is not None:
            dual = (y, bound)
            break
    if dual is None:
        return None
    y, bound = dual
    candidates = list(primal_hints)
    candidates.extend(dict(zip(lp.variables, xs)) for xs in _rationalize(res.x))
    for x in candidates:
        x = {v: Fraction(x.get(v, 0)) for v in lp.variables}
        if lp.evaluate(x) == bound and not lp.violations(x):
            return LPOutcome("optimal", value=bound, primal=x, dual=y, method="guided")
    return None


def _dual_bound(lp: LinearProgram, y: Sequence[Fraction]) -> Fraction | None:
    """Objective bound certified by y (max: upper, min: lower), or None if y is infeasible."""
    sign = 1 if lp.sense == "max" else -1
    acc: dict[str, Fraction] = {}
    by = Fraction(0)
    for yi, con in zip(y, lp.constraints):
        yp = sign * yi
        if (con.rel == "<=" and yp < 0) or (con.rel == ">=" and yp > 0):
            return None
        if not yp:
            continue
        by += yp * con.rhs
        for v, c in con.coeffs.items():
            acc[v] = acc.get(v, Fraction(0)) + yp * c
    for v in lp.variables:
        cj = sign * lp.objective.get(v, Fraction(0))
        a = acc.get(v, Fraction(0))
        if (lp.nonneg[v] and a < cj) or (not lp.nonneg[v] and a != cj):
            return None
    return sign * by + lp.objective_constant


def solve(lp: LinearProgram, method: str = "auto", primal_hints: Sequence[Mapping[str, Fraction]] = ()) -> LPOutcome:
    """Exact LP solve. method: exact | guided | auto (guided for large programs, exact fallback)."""
    if method not in ("auto", "exact", "guided"):
        raise InvalidInput(f"unknown method {method!r}")
    m, n = lp.size()
    big = m * (n + m) > EXACT_TABLEAU_CAP
    if method == "guided" or (method == "auto" and big):
        out = solve_guided(lp, primal_hints)
        if out is not None:
            return out
        if big and method == "auto":
            raise CapExceeded(
                f"LP with {m} rows and {n} columns is beyond the exact tableau cap and the "
                "guided answer did not verify"
            )
    return solve_exact(lp)


def check_farkas_variant(matrix: Sequence[Sequence], b: Sequence, variant: int) -> dict:
    """Decide the alternatives for rows i (x-side) and columns j (y-side).

    variant 1: x >= 0, sum x = 1, sum_i A_ij x_i >= b_j for all j
               or y >= 0, sum y = 1, sum_j A_ij y_j < sum_j b_j y_j for all i.
    variant 2: x >= 0, sum x = 1, sum_i A_ij x_i <= b_j for all j
               or y >= 0, sum y = 1, sum_j A_ij y_j > sum_j b_j y_j for all i.
    """
    if variant not in (1, 2):
        raise InvalidInput("variant must be 1 or 2")
    A = [[as_rational(a) for a in row] for row in matrix]
    b = [as_rational(q) for q in b]
    nrows = len(A)
    ncols = len(b)
    if nrows == 0 or any(len(row) != ncols for row in A):
        raise InvalidInput("matrix shape does not match b")
    s = 1 if variant == 1 else -1
    lp = LinearProgram()
    xs = [lp.add_var(f"x{i}") for i in range(nrows)]
    t = lp.add_var("t", nonneg=False)
    for j in range(ncols):
        # s*(sum_i A_ij x_i - b_j) >= t
        coeffs = {xs[i]: s * A[i][j] for i in range(nrows)}
        coeffs[t] = -1
        lp.add_constraint(coeffs, ">=", s * b[j])
    lp.add_constraint({x: 1 for x in xs}, "=", 1)
    if ncols == 0:
        x = [Fraction(int(i == 0)) for i in range(nrows)]
        return {"side": "x", "x": x}
    lp.set_objective({t: 1}, "max")
    out = solve_exact(lp)
    tstar = out.primal[t]
    if tstar >= 0:
        x = [out.primal[v] for v in xs]
        return {"side": "x", "x": x}
    # optimal duals of the >= rows (nonpositive in max form) give the y-side witness
    y = [-q for q in out.dual[:ncols]]
    total = sum(y)
    y = [q / total for q in y]
    for i in range(nrows):
        lhs = sum(A[i][j] * y[j] for j in range(ncols))
        rhs = sum(b[j] * y[j] for j in range(ncols))
        if not (s * lhs < s * rhs):
            raise AssertionError("internal error: Farkas y-side witness failed verification")
    return {"side": "y", "y": y, "gap": tstar}


def lp_from_json_text(text: str) -> LinearProgram:
    return LinearProgram.from_json(json.loads(text))
