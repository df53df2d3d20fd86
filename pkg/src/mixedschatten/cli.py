"""Command-line front end.

Exit codes: 0 success, 1 selftest failure, 2 refusal (no efficient algorithm,
problem hard in this region), 3 solver did not converge, 4 input error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from .boyd import UnsupportedRegion, boyd_solve_general
from .cb import cb_norm_1p, cb_norm_22, cb_norm_qp_cp
from .channels import NotCompletelyPositive, TensorMap, identity_channel, is_cp, load_map, save_map
from .ellipsoid import norm_qp_cp
from .linalg import format_index, parse_index
from .oracles import brute_norm_qp, diamond_lower_bound
from .results import NormResult
from .sat import build_gadget_channels, gadget_bound, gap_certify, load_instance

EXIT_OK, EXIT_FAILED, EXIT_REFUSED, EXIT_UNCONVERGED, EXIT_INPUT = 0, 1, 2, 3, 4

MODES = ("norm", "norm_positive", "cb", "cb_positive")
METHODS = ("auto", "boyd", "ellipsoid", "exact22", "oracle")

RESULT_SCHEMA = {
    "type": "object",
    "required": ["command", "status"],
    "properties": {
        "command": {"type": "string"},
        "status": {"enum": ["ok", "unconverged", "refused", "error", "passed", "failed"]},
        "request": {"type": "object"},
        "result": {
            "type": "object",
            "required": ["value", "value_lo", "value_hi", "method", "converged", "certified_upper"],
            "properties": {
                "value": {"type": ["number", "string"]},
                "value_lo": {"type": "number"},
                "value_hi": {"type": ["number", "string"]},
                "iterations": {"type": "integer"},
                "method": {"type": "string"},
                "converged": {"type": "boolean"},
                "certified_upper": {"type": "boolean"},
                "diagnostics": {"type": "object"},
            },
        },
        "provenance": {
            "type": "object",
            "required": ["route", "basis"],
            "properties": {"route": {"type": "string"}, "basis": {"type": "string"}},
        },
        "refusal": {
            "type": "object",
            "required": ["tag", "reason", "fallback"],
            "properties": {"tag": {"type": "string"}, "reason": {"type": "string"}, "fallback": {"type": "string"}},
        },
        "error": {"type": "string"},
        "report": {"type": "object"},
        "files": {"type": "array", "items": {"type": "string"}},
        "criteria": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["number", "title", "passed"],
                "properties": {"number": {"type": "integer"}, "title": {"type": "string"},
                               "passed": {"type": "boolean"}, "seconds": {"type": "number"}},
            },
        },
    },
}


class Refusal(Exception):
    """No solver with guarantees covers the request."""

    def __init__(self, tag, reason):
        super().__init__(reason)
        self.tag, self.reason = tag, reason


class InputError(ValueError):
    pass


@dataclass
class SolveRequest:
    map_path: str
    q: float
    p: float
    mode: str = "norm"
    method: str = "auto"
    eps: float = 1e-4
    seed: int = 0
    fmt: str = "json"

    def __post_init__(self):
        try:
            self.q, self.p = parse_index(self.q), parse_index(self.p)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        if self.mode not in MODES:
            raise InputError(f"mode must be one of {MODES}")
        if self.method not in METHODS:
            raise InputError(f"method must be one of {METHODS}")
        if not 0 < self.eps <= 0.5:
            raise InputError("eps must lie in (0, 0.5]")
        if self.method == "exact22" and (self.q, self.p) != (2, 2):
            raise InputError("method exact22 requires q = p = 2")

    def to_dict(self):
        return {"map": self.map_path, "q": format_index(self.q), "p": format_index(self.p), "mode": self.mode,
                "method": self.method, "eps": self.eps, "seed": self.seed}


# routing --------------------------------------------------------------------

BASIS = {
    "exact22": "the 2->2 norm (and its cb version) is the largest singular value of the superoperator",
    "boyd": "power iteration with certified two-sided bracket, guaranteed for CP maps with p <= 2 <= q",
    "ellipsoid": "ellipsoid method on the concave reformulation over states, CP maps with p <= q",
    "cb_norm_1p": "cb 1->p norm equals the (inf, p) two-indexed norm of the Choi matrix, a concave program",
    "cb_norm_qp_cp": "for CP maps with q >= p the cb norm equals the plain norm",
    "oracle": "random-restart projected ascent; a lower bound only",
}


def route(mode, q, p, cp):
    """Solver name for an auto request, or raise :class:`Refusal`."""
    if (q, p) == (2, 2) and (cp or mode in ("norm", "cb")):
        return "exact22"
    if mode in ("cb", "cb_positive"):
        if q == 1:
            return "cb_norm_1p"
        if cp and q >= p:
            return "cb_norm_qp_cp"
        if q < p:
            raise Refusal("no-algorithm:cb-hypercontractive",
                          "no efficient algorithm is known for cb norms with 1 < q < p")
        raise Refusal("no-algorithm:cb-noncp",
                      "cb q->p norms of maps that are not completely positive are only available for q = 1 or q = p = 2")
    if not cp:
        if mode == "norm_positive" and q == p == 1:
            raise Refusal("np-complete:positive-1to1-noncp",
                          "deciding the positive-restricted 1->1 norm of Hermiticity-preserving "
                          "measure-and-prepare maps (e.g. differences of channels) is NP-complete")
        raise Refusal("no-algorithm:noncp",
                      "no efficient algorithm is known for maps that are not completely positive outside q = p = 2")
    if q < p:
        if q == 1:
            raise Refusal("np-hard:1top-cp", f"computing the 1->p norm of CP maps is NP-hard for p > 1 (p = {format_index(p)})")
        raise Refusal("np-hard:hypercontractive", "computing q->p norms of CP maps in the region q < p is NP-hard")
    return "boyd" if p <= 2 <= q else "ellipsoid"


def _oracle(phi, req):
    q, p = req.q, req.p
    if req.mode in ("norm", "norm_positive"):
        domain = "psd" if req.mode == "norm_positive" else "auto"
        v, w = brute_norm_qp(phi, q, p, seed=req.seed, domain=domain)
    else:
        if q != p:
            raise InputError("the cb oracle covers q = p only")
        if q == 1:
            v, w = diamond_lower_bound(phi, seed=req.seed)
        else:
            amp = TensorMap([identity_channel(phi.in_dim), phi])
            v, w = brute_norm_qp(amp, q, p, seed=req.seed, domain="hermitian")
    return NormResult(v, math.inf, w, 0, "oracle:projected-ascent", True, False)


def dispatch(req: SolveRequest):
    """Run the request; returns ``(NormResult, provenance)``."""
    phi = _load_map(req.map_path)
    cp = is_cp(phi)
    q, p = req.q, req.p
    cb = req.mode in ("cb", "cb_positive")
    name = route(req.mode, q, p, cp) if req.method == "auto" else req.method
    try:
        if name == "exact22":
            res = cb_norm_22(phi)
        elif name == "oracle":
            res = _oracle(phi, req)
        elif name == "cb_norm_1p":
            if q != 1:
                raise InputError("cb_norm_1p needs q = 1")
            res = cb_norm_1p(phi, p, eps=req.eps, positive_only=req.mode == "cb_positive")
        elif name == "cb_norm_qp_cp":
            res = cb_norm_qp_cp(phi, q, p, eps=req.eps)
        elif cb:
            res = cb_norm_qp_cp(phi, q, p, eps=req.eps, method=name)
            name = "cb_norm_qp_cp"
        elif name == "boyd":
            res = boyd_solve_general(phi, q, p, eps=req.eps)
        else:
            res = norm_qp_cp(phi, q, p, eps=req.eps)
    except NotCompletelyPositive as exc:
        raise Refusal("no-algorithm:noncp", f"the selected solver needs a CP map: {exc}") from exc
    except UnsupportedRegion as exc:
        raise Refusal("no-algorithm:region", str(exc)) from exc
    return res, {"route": name, "basis": BASIS.get(name, name)}


# I/O ------------------------------------------------------------------------

def _load_map(path):
    try:
        return load_map(path)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"cannot read map file {path}: {exc}") from exc


def _load_instance(path):
    try:
        return load_instance(path)
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        raise InputError(f"cannot read instance file {path}: {exc}") from exc


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return _jsonable(v.item())
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _emit(doc, fmt, out):
    doc = _jsonable(doc)
    if fmt == "json":
        print(json.dumps(doc, indent=2), file=out)
        return
    status = doc["status"]
    print(f"{doc['command']}: {status}", file=out)
    if "result" in doc:
        r = doc["result"]
        print(f"  value in [{r['value_lo']}, {r['value_hi']}]  (method {r['method']}, converged {r['converged']})",
              file=out)
    if "provenance" in doc:
        print(f"  route: {doc['provenance']['route']} ({doc['provenance']['basis']})", file=out)
    if "refusal" in doc:
        print(f"  refused [{doc['refusal']['tag']}]: {doc['refusal']['reason']}", file=out)
        print(f"  {doc['refusal']['fallback']}", file=out)
    if "report" in doc:
        for k, v in doc["report"].items():
            print(f"  {k}: {v}", file=out)
    if "error" in doc:
        print(f"  error: {doc['error']}", file=out)


# commands -------------------------------------------------------------------

def _solve(command, req, out):
    try:
        res, prov = dispatch(req)
    except Refusal as exc:
        doc = {"command": command, "status": "refused", "request": req.to_dict(),
               "refusal": {"tag": exc.tag, "reason": exc.reason,
                           "fallback": "rerun with --method oracle for a lower bound"}}
        _emit(doc, req.fmt, out)
        return EXIT_REFUSED
    status = "ok" if res.converged else "unconverged"
    doc = {"command": command, "status": status, "request": req.to_dict(), "result": res.to_dict(),
           "provenance": prov}
    _emit(doc, req.fmt, out)
    return EXIT_OK if res.converged else EXIT_UNCONVERGED


def cmd_compute(args, out):
    req = SolveRequest(args.map, args.q, args.p, args.mode, args.method, args.eps, args.seed, args.format)
    return _solve("compute", req, out)


def cmd_cb(args, out):
    mode = "cb_positive" if args.positive else "cb"
    req = SolveRequest(args.map, 1, args.p, mode, "auto", args.eps, args.seed, args.format)
    return _solve("cb", req, out)


def cmd_reduce_sat(args, out):
    inst = _load_instance(args.instance)
    try:
        ch = build_gadget_channels(inst, args.eta)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    os.makedirs(args.out, exist_ok=True)
    files = []
    for name, phi in (("phi_trace", ch.phi_trace), ("phi_swap", ch.phi_swap), ("phi_cube", ch.phi_cube),
                      ("phi_H", ch.phi_H)):
        path = os.path.join(args.out, name + ".json")
        save_map(phi, path)
        files.append(path)
    report = gap_certify(inst, args.eta, args.p)
    report["eta_is_d_squared"] = bool(args.eta == inst.d**2)
    report["entanglement_breaking_flag"] = ch.entanglement_breaking
    path = os.path.join(args.out, "report.json")
    with open(path, "w") as fh:
        json.dump(_jsonable(report), fh, indent=2)
    files.append(path)
    _emit({"command": "reduce-sat", "status": "ok", "report": report, "files": files}, args.format, out)
    return EXIT_OK


def cmd_certify(args, out):
    inst = _load_instance(args.instance)
    try:
        report = gap_certify(inst, args.eta, args.p)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    report["gadget_bound_at_d_squared"] = gadget_bound(inst.d**2, inst.d, args.p)
    _emit({"command": "certify", "status": "ok", "report": report}, args.format, out)
    return EXIT_OK


def cmd_selftest(args, out):
    from .acceptance import run_all

    level = "full" if args.full else "quick"
    stream = out if args.format == "text" else None
    results = run_all(level, args.seed, stream)
    ok = all(r.passed for r in results)
    if args.format == "json":
        doc = {"command": "selftest", "status": "passed" if ok else "failed",
               "criteria": [{"number": r.number, "title": r.title, "passed": r.passed, "seconds": r.seconds,
                             "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in r.checks]}
                            for r in results]}
        _emit(doc, "json", out)
    return EXIT_OK if ok else EXIT_FAILED


class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors (exit 4), keeping exit 2 for refusals."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser():
    ap = _Parser(prog="mixedschatten", description="Mixed Schatten and cb norms of linear maps.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, fmt_default="json"):
        p.add_argument("--eps", type=float, default=1e-4, help="relative tolerance in (0, 0.5]")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", choices=("json", "text"), default=fmt_default)

    c = sub.add_parser("compute", help="q->p norm of a map")
    c.add_argument("--map", required=True, help="map file (JSON)")
    c.add_argument("--q", required=True, help="input index, e.g. 2, 4/3 or inf")
    c.add_argument("--p", required=True, help="output index")
    c.add_argument("--mode", choices=MODES, default="norm")
    c.add_argument("--method", choices=METHODS, default="auto")
    common(c)
    c.set_defaults(func=cmd_compute)

    c = sub.add_parser("cb", help="cb 1->p norm of a map")
    c.add_argument("--map", required=True)
    c.add_argument("--p", required=True)
    c.add_argument("--positive", action="store_true", help="restrict to positive inputs")
    common(c)
    c.set_defaults(func=cmd_cb)

    c = sub.add_parser("reduce-sat", help="write the gadget channels of a 2-out-of-4-SAT instance")
    c.add_argument("--instance", required=True)
    c.add_argument("--eta", type=float, required=True)
    c.add_argument("--out", required=True, help="output directory")
    c.add_argument("--p", default="2", help="index used for the gap report")
    c.add_argument("--format", choices=("json", "text"), default="json")
    c.set_defaults(func=cmd_reduce_sat)

    c = sub.add_parser("certify", help="proper-certificate gap report for an instance")
    c.add_argument("--instance", required=True)
    c.add_argument("--eta", type=float, required=True)
    c.add_argument("--p", required=True)
    c.add_argument("--format", choices=("json", "text"), default="json")
    c.set_defaults(func=cmd_certify)

    c = sub.add_parser("selftest", help="run the acceptance suite")
    c.add_argument("--full", action="store_true", help="full sample sizes instead of the quick subset")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--format", choices=("json", "text"), default="text")
    c.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except InputError as exc:
        _emit({"command": args.command, "status": "error", "error": str(exc)}, getattr(args, "format", "json"), out)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
