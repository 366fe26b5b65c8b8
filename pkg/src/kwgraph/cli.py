"""Command line front end.

Subcommands: validate, spectrum, classify, solve, threshold, sweep, and a
dev group with the brute force oracle.  All reports are JSON documents
carrying ``"schema": "kw/1"`` and an echo of the effective configuration;
identical inputs, flags, and seed produce byte-identical output.  Exit
codes: 0 success, 2 not solvable, 3 no convergence, 1 invalid input.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .errors import CLIInputError, KWError, NoConvergence, NotSolvable
from .graph_core import graph_to_doc, load_graph, load_problem, ProblemInstance
from .oracle import brute_force_solve
from .solvability import classify, estimate_threshold
from .solvers import solve
from .spectral import eigen_decompose, trudinger_moser_constant

SCHEMA = "kw/1"

log = logging.getLogger(__name__)


def _finite(x: float):
    x = float(x)
    return x if np.isfinite(x) else None


def _jsonable(obj):
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        return _finite(obj)
    if isinstance(obj, (np.floating,)):
        return _finite(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "value") and isinstance(obj.value, str):
        return obj.value
    return str(obj)


def _dumps(doc) -> str:
    return json.dumps(_jsonable(doc), sort_keys=True, allow_nan=False)


def _write(text: str, output: str | None) -> None:
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _error_doc(exc: KWError) -> dict:
    return {"schema": SCHEMA,
            "error": {"code": type(exc).__name__,
                      "message": str(exc),
                      "context": _jsonable(getattr(exc, "context", {}))}}


def _config(args, keys) -> dict:
    out = {}
    for key in keys:
        out[key] = getattr(args, key.replace("-", "_"))
    return out


def _load_instance(args) -> ProblemInstance:
    g = load_graph(args.graph)
    return load_problem(g, args.problem)


# ---------------------------------------------------------------------------
# command handlers: each returns (document text, exit code)

def _cmd_validate(args):
    g = load_graph(args.graph)
    doc = {"schema": SCHEMA, "command": "validate",
           "graph": graph_to_doc(g), "n": g.n,
           "edge_count": int(len(g.edge_weight)),
           "total_measure": g.total_measure,
           "config": _config(args, ["graph"])}
    return _dumps(doc), 0


def _cmd_spectrum(args):
    g = load_graph(args.graph)
    report = eigen_decompose(g)
    doc = {"schema": SCHEMA, "command": "spectrum",
           "vertices": list(g.vertices),
           "eigenvalues": report.eigenvalues,
           "poincare_constant": _finite(report.poincare_constant),
           "embedding_constant": report.embedding_constant,
           "trudinger_moser_constant": trudinger_moser_constant(g, report),
           "config": _config(args, ["graph"])}
    if args.eigenvectors:
        doc["eigenvectors"] = report.eigenvectors  # row per vertex, column per eigenvalue
    return _dumps(doc), 0


def _cmd_classify(args):
    p = _load_instance(args)
    verdict = classify(p)
    doc = {"schema": SCHEMA, "command": "classify",
           "c": p.c,
           "verdict": verdict.verdict.value,
           "conditions": [{"name": c.name, "value": c.value, "passed": c.passed}
                          for c in verdict.conditions],
           "guaranteed_range": _finite(verdict.guaranteed_range)
           if verdict.guaranteed_range is not None else None,
           "bracket": list(verdict.bracket) if verdict.bracket else None,
           "detail": verdict.detail,
           "config": _config(args, ["graph", "problem"])}
    code = 2 if verdict.verdict.value == "NotSolvable" else 0
    return _dumps(doc), code


def _solve_doc(p: ProblemInstance, report, args, include_c=False):
    doc = {"schema": SCHEMA, "command": "solve",
           "vertices": list(p.graph.vertices),
           "u": report.u,
           "residual_inf": report.residual_inf,
           "integral_identity_gap": report.integral_identity_gap,
           "method": report.method.value,
           "iterations": report.iterations,
           "multipliers": report.multipliers,
           "config": _config(args, ["graph", "problem", "method", "tol",
                                    "max_iter", "seed"])}
    if include_c:
        doc["c"] = p.c
    if args.trace:
        doc["trace"] = list(report.trace)
    return doc


def _cmd_solve(args):
    p = _load_instance(args)
    report = solve(p, method=args.method, tol=args.tol,
                   max_iter=args.max_iter, seed=args.seed)
    if args.trace:
        for entry in report.trace:
            sys.stderr.write(_dumps(entry) + "\n")
    return _dumps(_solve_doc(p, report, args)), 0


def _cmd_threshold(args):
    g = load_graph(args.graph)
    p = load_problem(g, args.problem)  # threshold uses h only; c is ignored
    estimate = estimate_threshold(
        g, p.h, resolution=args.resolution, max_probes=args.max_probes,
        c_min=args.c_min, tol=args.tol, seed=args.seed)
    doc = {"schema": SCHEMA, "command": "threshold",
           "bracket": list(estimate.bracket),
           "truncated": estimate.truncated,
           "consistent": estimate.consistent,
           "probes": [[c, ok] for c, ok in estimate.probes],
           "config": _config(args, ["graph", "problem", "resolution",
                                    "max_probes", "c_min", "tol", "seed"])}
    return _dumps(doc), 0


def _cmd_sweep(args):
    if args.c_count < 1:
        raise CLIInputError("--c-count must be at least 1")
    g = load_graph(args.graph)
    base = load_problem(g, args.problem)
    cs = np.linspace(args.c_from, args.c_to, args.c_count)
    lines = []
    failures: set[int] = set()
    for c in cs:
        p = ProblemInstance(graph=g, h=base.h, c=float(c))
        try:
            report = solve(p, method=args.method, tol=args.tol,
                           max_iter=args.max_iter, seed=args.seed)
            doc = _solve_doc(p, report, args, include_c=True)
            doc["command"] = "sweep"
            doc["status"] = "solved"
        except (NotSolvable, NoConvergence) as exc:
            doc = _error_doc(exc)
            doc.update(command="sweep", c=float(c), status="failed")
            failures.add(exc.exit_code)
        lines.append(_dumps(doc))
    code = 3 if 3 in failures else (2 if 2 in failures else 0)
    return "\n".join(lines), code


def _cmd_oracle(args):
    p = _load_instance(args)
    result = brute_force_solve(p, tuple(args.box), grid=args.grid)
    doc = {"schema": SCHEMA, "command": "dev-oracle",
           "vertices": list(p.graph.vertices),
           "roots": [r for r in result.roots],
           "root_count": len(result.roots),
           "search_box": [list(pair) for pair in result.search_box],
           "grid_resolution": result.grid_resolution,
           "config": _config(args, ["graph", "problem", "grid"])}
    return _dumps(doc), 0


# ---------------------------------------------------------------------------
# parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CLIInputError(message)


def _add_common(sub, problem=True, solver=False):
    sub.add_argument("--graph", required=True, help="graph JSON file")
    if problem:
        sub.add_argument("--problem", required=True, help="problem JSON file")
    sub.add_argument("--output", default=None, help="write the report here instead of stdout")
    if solver:
        sub.add_argument("--tol", type=float, default=1e-10)
        sub.add_argument("--max-iter", type=int, default=None)
        sub.add_argument("--method", default="auto",
                         choices=["auto", "variational", "newton", "monotone"])
        sub.add_argument("--seed", type=int, default=0)
        sub.add_argument("--trace", action="store_true",
                         help="emit per-iteration JSON lines on stderr and embed the trace")


def _build_parser() -> _Parser:
    parser = _Parser(prog="kw",
                     description="Kazdan-Warner equation on finite weighted graphs")
    parser.add_argument("--version", action="version", version=f"kw {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("validate", help="check a graph file and echo its canonical form")
    _add_common(sub, problem=False)
    sub.set_defaults(func=_cmd_validate)

    sub = subs.add_parser("spectrum", help="eigenvalues and inequality constants")
    _add_common(sub, problem=False)
    sub.add_argument("--eigenvectors", action="store_true")
    sub.set_defaults(func=_cmd_spectrum)

    sub = subs.add_parser("classify", help="decide solvability for the given c")
    _add_common(sub)
    sub.set_defaults(func=_cmd_classify)

    sub = subs.add_parser("solve", help="solve the equation and certify the residual")
    _add_common(sub, solver=True)
    sub.set_defaults(func=_cmd_solve)

    sub = subs.add_parser("threshold", help="bracket the negative-c solvability threshold")
    _add_common(sub)
    sub.add_argument("--resolution", type=float, default=1e-3)
    sub.add_argument("--max-probes", type=int, default=60)
    sub.add_argument("--c-min", type=float, default=-1e6)
    sub.add_argument("--tol", type=float, default=1e-8)
    sub.add_argument("--seed", type=int, default=0)
    sub.set_defaults(func=_cmd_threshold)

    sub = subs.add_parser("sweep", help="solve over a grid of c values (JSON lines)")
    _add_common(sub, solver=True)
    sub.add_argument("--c-from", type=float, required=True)
    sub.add_argument("--c-to", type=float, required=True)
    sub.add_argument("--c-count", type=int, required=True)
    sub.set_defaults(func=_cmd_sweep)

    dev = subs.add_parser("dev", help="development utilities")
    dev_subs = dev.add_subparsers(dest="dev_command", required=True)
    sub = dev_subs.add_parser("oracle", help="brute force roots on up to 3 vertices")
    _add_common(sub)
    sub.add_argument("--box", type=float, nargs=2, required=True,
                     metavar=("LO", "HI"), help="search interval per coordinate")
    sub.add_argument("--grid", type=int, default=200)
    sub.set_defaults(func=_cmd_oracle)

    return parser


def main(argv=None) -> int:
    level = os.environ.get("KW_LOG", "").upper()
    if level:
        logging.basicConfig(level=getattr(logging, level, logging.INFO),
                            stream=sys.stderr,
                            format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except CLIInputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    try:
        text, code = args.func(args)
    except KWError as exc:
        _write(_dumps(_error_doc(exc)), getattr(args, "output", None))
        return exc.exit_code
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    _write(text, args.output)
    return code


if __name__ == "__main__":
    sys.exit(main())
