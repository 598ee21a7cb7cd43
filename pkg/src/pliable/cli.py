"""Command-line entry point: `pliable <command> ...`, JSON in and out, exact rationals as "p/q"."""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from fractions import Fraction

from . import dense, exact, fragility, generators, lp, overcast, ptas, reductions, relax
from .errors import CapExceeded, InfiniteDistance, InvalidInput, PliableError, VerificationError
from .graphs import Graph
from .rationals import as_rational, fmt, surrogate_factor
from .structures import ValuedStructure, gaifman, rescale

EXIT_OK, EXIT_USAGE, EXIT_CAP, EXIT_VERIFY = 0, 2, 3, 4

SCHEMAS = {
    "structure": {
        "type": "object",
        "required": ["signature", "domain"],
        "properties": {
            "signature": {"type": "array", "items": {"type": "object", "required": ["name", "arity"]}},
            "domain": {"type": "array", "items": {"type": "string"}},
            "values": {"type": "object", "additionalProperties": {
                "type": "array", "items": {"type": "object", "required": ["tuple", "value"]}}},
        },
    },
    "graph": {
        "type": "object",
        "required": ["vertices"],
        "properties": {
            "vertices": {"type": "array"},
            "edges": {"type": "array", "items": {"type": "array", "minItems": 2, "maxItems": 2}},
            "vertex_weights": {"type": "object"},
            "edge_weights": {"type": "object", "description": 'keys "u,v", values "p/q"'},
        },
    },
    "overcast": {"type": "array", "items": {"type": "object", "required": ["map", "prob"]}},
    "modulator": {
        "type": "object",
        "required": ["kind", "support"],
        "properties": {"kind": {"enum": ["vertex", "edge"]}, "parameter": {"type": "string"},
                       "support": {"type": "array", "items": {"type": "object", "required": ["set", "prob"]}}},
    },
    "partition": {"type": "object", "required": ["parts"],
                  "properties": {"parts": {"type": "array", "items": {"type": "array"}}}},
    "witness": {"type": "object", "required": ["B", "omega", "omega_back"],
                "description": "bundle as emitted by pliable-approx"},
    "lp": {"type": "object", "description": "linear program as read by LinearProgram.from_json"},
}


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _Usage(message)


def _read(path: str, inputs: dict) -> dict:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise _Usage(f"cannot read {path}: {exc.strerror}") from exc
    inputs[path] = hashlib.sha256(raw).hexdigest()
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise _Usage(f"{path} is not valid JSON: {exc}") from exc


def _structure(path: str, inputs: dict) -> ValuedStructure:
    data = _read(path, inputs)
    if isinstance(data, dict) and "signature" in data:
        return ValuedStructure.from_json(data)
    return dense.as_graph_structure(Graph.from_json(data))


def _graph(path: str, inputs: dict) -> Graph:
    data = _read(path, inputs)
    if isinstance(data, dict) and "signature" in data:
        return gaifman(ValuedStructure.from_json(data))
    return Graph.from_json(data)


def _rat(text: str) -> Fraction:
    try:
        return as_rational(text)
    except (ValueError, ZeroDivisionError, InvalidInput) as exc:
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from exc


# commands


def cmd_solve(a, inputs):
    A, B = _structure(a.A, inputs), _structure(a.B, inputs)
    if a.method == "brute":
        res = exact.opt_bruteforce(A, B, a.cap)
    elif a.method == "treedec":
        res = exact.opt_treedec(A, B)
    else:
        res = exact.opt(A, B)
    return {"value": fmt(res.value), "witness": res.witness}


def cmd_relax(a, inputs):
    A, B = _structure(a.A, inputs), _structure(a.B, inputs)
    sa = relax.opt_sa(A, B, a.level, a.method)
    out = {"level": a.level, "sa_value": fmt(sa)}
    if len(B.domain) ** len(A.domain) <= a.cap:
        o = exact.opt_bruteforce(A, B, a.cap).value
        out["exact_value"] = fmt(o)
        out["gap"] = fmt(sa - o)
    return out


def cmd_overcast(a, inputs):
    A, B = _structure(a.A, inputs), _structure(a.B, inputs)
    target = B if a.eps is None else rescale(B, surrogate_factor(a.eps))
    res = overcast.overcast_find(A, target, a.cap)
    if isinstance(res, overcast.Overcast):
        rep = overcast.overcast_verify(res, A, target)
        return {"exists": True, "overcast": res.to_json(), "slack": fmt(min(rep.slack.values(), default=Fraction(0)))}
    return {"exists": False, "certificate": res.to_json()}


def cmd_distance(a, inputs):
    A, B = _structure(a.A, inputs), _structure(a.B, inputs)
    res = overcast.opt_distance_bound(A, B, a.eps, a.cap)
    out = {
        "accepted": {fmt(e): ok for e, ok in res["accepted"].items()},
        "forward_factor": None if res["forward_factor"] is None else fmt(res["forward_factor"]),
        "backward_factor": None if res["backward_factor"] is None else fmt(res["backward_factor"]),
    }
    out["least"] = res["least"].to_json() if res["least"] is not None else None
    return out


def cmd_modulator(a, inputs):
    if a.family == "grid":
        if a.dims is None:
            raise _Usage("grid family needs --dims d n")
        pi = fragility.grid_modulator(a.dims[0], a.dims[1], a.layers, a.axes)
    else:
        if a.graph is None:
            raise _Usage("baker family needs a graph file")
        G = _graph(a.graph, inputs)
        pi = fragility.baker_modulator(G, a.layers, a.root)
    if a.edge:
        pi = fragility.edge_from_vertex(pi)
    if not pi.verify():
        raise VerificationError("modulator failed its residual check")
    return {"modulator": pi.to_json(), "graph": pi.graph.to_json()}


def _load_modulator(path: str, A: ValuedStructure, inputs: dict) -> fragility.FractionalModulator:
    data = _read(path, inputs)
    body = data.get("modulator", data) if isinstance(data, dict) else data
    return fragility.FractionalModulator.from_json(gaifman(A), body)


def cmd_pliable_approx(a, inputs):
    A = _structure(a.A, inputs)
    pi = _load_modulator(a.modulator, A, inputs)
    res = fragility.fragile_to_pliable(A, pi)
    if not overcast.overcast_verify(res.omega, A, res.B).ok:
        raise VerificationError("forward overcast failed verification")
    if not overcast.overcast_verify(res.omega_back, res.B, rescale(A, res.loss_factor)).ok:
        raise VerificationError("backward overcast failed verification")
    return res.to_json()


def cmd_reduce(a, inputs):
    A = _structure(a.A, inputs)
    if a.source == "td":
        res = reductions.td_to_size(A, a.eps)
    else:
        res = reductions.cc_to_size(A, a.eps, a.d)
    return res.to_json()


def cmd_dense(a, inputs):
    G = _structure(a.G, inputs)
    if a.action == "approx":
        P, defect = dense.regularity_search(G, a.k, a.budget, a.seed)
        out = {"partition": P.to_json(), "defect": fmt(defect)}
        if a.eps0 is not None:
            out["quotient"] = dense.quotient_overcast(G, P, a.eps0, a.cap).to_json()
        return out
    if a.partition is None:
        raise _Usage(f"dense {a.action} needs --partition")
    P = dense.Partition.from_json(_read(a.partition, inputs))
    if a.action == "quotient":
        if a.eps0 is None:
            raise _Usage("dense quotient needs --eps0")
        return dense.quotient_overcast(G, P, a.eps0, a.cap).to_json()
    if a.action == "homogeneity":
        if a.pair:
            i, j = a.pair
            return dense.homogeneity_defect(G, P.parts[i], P.parts[j], a.mode).to_json()
        d, ex = dense.partition_defect(G, P, mode=a.mode)
        return {"defect": fmt(d), "exact": ex}
    F = [tuple(p) for p in (a.F or [])]
    if a.action == "counting":
        return dense.counting_check(G, P, F, a.cap, a.eps).to_json()
    if a.ab is None:
        raise _Usage("dense extension needs --ab i j")
    return dense.extension_check(G, P, F, tuple(a.ab), a.cap, a.eps).to_json()


def cmd_ptas(a, inputs):
    A, C = _structure(a.A, inputs), _structure(a.C, inputs)
    if a.witness is None:
        raise _Usage("ptas needs a witness file")
    if a.mode == "construct":
        pi = _load_modulator(a.witness, A, inputs)
        return ptas.ptas_constructive(A, C, pi).to_json()
    if a.eps is None:
        raise _Usage("ptas --mode value needs --eps")
    data = _read(a.witness, inputs)
    try:
        B = ValuedStructure.from_json(data["B"])
        om, back = overcast.Overcast.from_json(data["omega"]), overcast.Overcast.from_json(data["omega_back"])
    except (KeyError, TypeError) as exc:
        raise InvalidInput(f"malformed witness bundle: {exc}") from exc
    return ptas.ptas_value(A, C, a.eps, B, om, back).to_json()


def cmd_gen(a, inputs):
    params = {}
    for key in ("n", "d", "a", "b"):
        if getattr(a, key) is not None:
            params[key] = getattr(a, key)
    if a.dims:
        params["dims"] = a.dims
    if a.p is not None:
        params["p"] = a.p
    if a.density is not None:
        params["density"] = a.density
    try:
        obj = generators.gen(a.kind, a.seed, **params)
    except KeyError as exc:
        raise _Usage(f"generator {a.kind} needs --{exc.args[0]}") from exc
    if isinstance(obj, Graph) and a.structure:
        obj = generators.to_structure(obj)
    return obj.to_json()


def cmd_lp(a, inputs):
    prog = lp.LinearProgram.from_json(_read(a.file, inputs))
    return lp.solve(prog, a.method).to_json()


def _common(p: argparse.ArgumentParser, default=None):
    # sub-commands repeat the global flags; SUPPRESS keeps them from resetting the top level
    kw = {} if default is None else {"default": default}
    p.add_argument("--out", "-o", help="write the report here instead of stdout", **kw)
    p.add_argument("--human", action="store_true", help="add approximate decimals under 'human'", **kw)
    p.add_argument("--timings", action="store_true", help="include wall-clock timings (breaks byte-identity)", **kw)
    p.add_argument("--schema", action="store_true", help="print the input JSON schemas and exit", **kw)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pliable", description=__doc__)
    _common(p)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    _add = sub.add_parser

    def add_parser(*args, **kw):
        s = _add(*args, **kw)
        _common(s, argparse.SUPPRESS)
        return s

    sub.add_parser = add_parser

    s = sub.add_parser("solve", help="exact opt(A, B)")
    s.add_argument("A"), s.add_argument("B")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--exact", dest="method", action="store_const", const="auto")
    g.add_argument("--method", choices=["auto", "brute", "treedec"])
    s.add_argument("--cap", type=int, default=10**6)
    s.set_defaults(func=cmd_solve, method="auto")

    s = sub.add_parser("relax", help="Sherali-Adams value")
    s.add_argument("A"), s.add_argument("B")
    s.add_argument("--level", "-k", type=int, required=True)
    s.add_argument("--method", choices=["auto", "exact", "guided"], default="auto")
    s.add_argument("--cap", type=int, default=10**5, help="brute-force comparison cap")
    s.set_defaults(func=cmd_relax)

    s = sub.add_parser("overcast", help="find an overcast A -> B or a certificate")
    s.add_argument("A"), s.add_argument("B")
    s.add_argument("--eps", type=_rat)
    s.add_argument("--cap", type=int, default=overcast.MAP_CAP)
    s.set_defaults(func=cmd_overcast)

    s = sub.add_parser("distance", help="decide opt-distance bounds")
    s.add_argument("A"), s.add_argument("B")
    s.add_argument("--eps", type=_rat, nargs="+", default=[Fraction(0)])
    s.add_argument("--cap", type=int, default=overcast.MAP_CAP)
    s.set_defaults(func=cmd_distance)

    s = sub.add_parser("modulator", help="fractional modulator families")
    s.add_argument("graph", nargs="?")
    s.add_argument("--family", choices=["baker", "grid"], default="baker")
    s.add_argument("--layers", type=int, required=True)
    s.add_argument("--root")
    s.add_argument("--dims", type=int, nargs=2, metavar=("D", "N"))
    s.add_argument("--axes", type=int, nargs="+")
    s.add_argument("--edge", action="store_true", help="convert to an edge modulator")
    s.set_defaults(func=cmd_modulator)

    s = sub.add_parser("pliable-approx", help="(B, omega, omega') from a vertex modulator")
    s.add_argument("A"), s.add_argument("modulator")
    s.set_defaults(func=cmd_pliable_approx)

    s = sub.add_parser("reduce", help="bounded-size equivalent structure")
    s.add_argument("A")
    s.add_argument("--target", choices=["size"], default="size")
    s.add_argument("--from", dest="source", choices=["cc", "td"], default="cc")
    s.add_argument("--eps", type=_rat, required=True)
    s.add_argument("--d", type=int)
    s.set_defaults(func=cmd_reduce)

    s = sub.add_parser("dense", help="partition tools for dense graphs")
    s.add_argument("action", choices=["quotient", "homogeneity", "counting", "extension", "approx"])
    s.add_argument("G")
    s.add_argument("--partition")
    s.add_argument("--eps0", type=_rat)
    s.add_argument("--eps", type=_rat, help="override the measured defect")
    s.add_argument("--pair", type=int, nargs=2)
    s.add_argument("--mode", choices=["exact", "sampled"], default="exact")
    s.add_argument("--F", type=int, nargs=2, action="append", metavar=("I", "J"))
    s.add_argument("--ab", type=int, nargs=2)
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--budget", type=int, default=50)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--cap", type=int, default=dense.PMAP_CAP)
    s.set_defaults(func=cmd_dense)

    s = sub.add_parser("ptas", help="approximation drivers")
    s.add_argument("A"), s.add_argument("C"), s.add_argument("witness", nargs="?")
    s.add_argument("--eps", type=_rat)
    s.add_argument("--mode", choices=["value", "construct"], default="value")
    s.set_defaults(func=cmd_ptas)

    s = sub.add_parser("gen", help="seeded instance generators")
    s.add_argument("kind", choices=["grid", "clique", "gnp", "bipartite", "path", "tournament", "triangle_glued"])
    s.add_argument("--n", type=int), s.add_argument("--d", type=int)
    s.add_argument("--a", type=int), s.add_argument("--b", type=int)
    s.add_argument("--dims", type=int, nargs="+")
    s.add_argument("--p", type=_rat), s.add_argument("--density", type=_rat)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--structure", action="store_true", help="emit graphs as structures")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("lp", help="exact LP solve")
    s.add_argument("file")
    s.add_argument("--method", choices=["auto", "exact", "guided"], default="auto")
    s.set_defaults(func=cmd_lp)
    return p


def _humanize(obj):
    if isinstance(obj, dict):
        return {k: _humanize(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_humanize(v) for v in obj]
    if isinstance(obj, str) and "/" in obj:
        try:
            q = Fraction(obj)
        except (ValueError, ZeroDivisionError):
            return obj
        return f"~{float(q):.6g}"
    return obj


def _emit(report: dict, out: str | None):
    text = json.dumps(report, indent=2, sort_keys=False) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except _Usage as exc:
        print(f"pliable: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if a.schema:
        _emit(SCHEMAS, a.out)
        return EXIT_OK
    if a.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    inputs: dict[str, str] = {}
    start = time.perf_counter()
    try:
        result = a.func(a, inputs)
    except _Usage as exc:
        print(f"pliable: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapExceeded as exc:
        print(f"pliable: cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except VerificationError as exc:
        print(f"pliable: verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (InvalidInput, InfiniteDistance, PliableError) as exc:
        print(f"pliable: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = {"command": a.command, "inputs": inputs}
    report.update(result)
    if a.human:
        report["human"] = _humanize(result)
    if a.timings:
        report["timings"] = {"total_seconds": round(time.perf_counter() - start, 6)}
    _emit(report, a.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
