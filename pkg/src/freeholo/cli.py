"""Batch command line front end.

Every subcommand reads JSON files, runs one library routine, and prints a
JSON report to stdout (or writes it to ``--out``). Reports are rendered
with sorted keys and a fixed indent, so identical inputs plus an identical
seed produce byte-identical output. Each report embeds the schema version,
the tensor layout convention string, the tolerance, and the seed.

Exit status: 0 on success, 1 when the mathematics rejects the input
(mismatched Gram data, no covering grid, a floor violation, a singular
evaluation, a point outside the domain), and 2 on I/O or schema problems.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import approx as approx_mod
from . import jsonio, mero, model, ncpoint, realize, sampling
from .errors import (
    ExprSyntaxError,
    FreeholoError,
    SchemaError,
    UnknownVariable,
)
from .exprlang import eval_expr, parse, print_expr
from .freepoly import GradedPoint
from .jsonio import SCHEMA_VERSION
from .mat import CMatrix, op_norm
from .realize import TENSOR_CONVENTION

_INPUT_ERRORS = (SchemaError, ExprSyntaxError, UnknownVariable)


def _base_report(args) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "convention": TENSOR_CONVENTION,
        "tol": args.tol,
        "seed": args.seed,
    }


def _emit(report: dict, out_path) -> None:
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _matrix_json(arr) -> dict:
    return CMatrix(np.asarray(arr, dtype=complex)).to_json()


def _pairs(values) -> list:
    return [[float(np.real(v)), float(np.imag(v))] for v in values]


def _read_expr(args):
    if getattr(args, "expr", None) is not None:
        return args.expr
    path = getattr(args, "expr_file", None)
    if path is None:
        raise SchemaError("one of --expr or --expr-file is required")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read().strip()
    except OSError as exc:
        raise SchemaError(f"cannot read expression file {path}: {exc}") from exc


def _expr_evaluator(src: str, d: int):
    ast = parse(src, d)

    def f(x: GradedPoint):
        return eval_expr(ast, x)

    return ast, f


def _realized_evaluator(path: str):
    r = jsonio.load("realization", path)

    def f(x: GradedPoint):
        return realize.eval_direct(r, x)

    return r, f


def _load_function(args):
    """Return (kind, evaluator, dims, domain predicate or None)."""
    if getattr(args, "realization", None) is not None:
        r, f = _realized_evaluator(args.realization)

        def inside(p):
            return ncpoint.in_gdelta(r.delta, p).inside

        return "realization", f, (r.dim_k1, r.dim_k2), inside
    src = _read_expr(args)
    if getattr(args, "vars", None) is None:
        raise SchemaError("--vars is required with --expr/--expr-file")
    _, f = _expr_evaluator(src, args.vars)
    return "expr", f, (1, 1), None


def _cmd_eval(args) -> dict:
    src = _read_expr(args)
    ast, f = _expr_evaluator(src, args.vars)
    x = jsonio.load("gradedpoint", args.point)
    if x.d != args.vars:
        raise SchemaError(f"point has d={x.d} but --vars is {args.vars}")
    value = f(x)
    report = _base_report(args)
    report.update(
        {
            "command": "eval",
            "expr": print_expr(ast),
            "vars": args.vars,
            "level": x.n,
            "value": _matrix_json(value),
        }
    )
    return report


def _cmd_member(args) -> dict:
    delta = jsonio.load("polymatrix", args.delta)
    x = jsonio.load("gradedpoint", args.point)
    m = ncpoint.in_gdelta(delta, x, margin=args.margin)
    report = _base_report(args)
    report.update(
        {
            "command": "member",
            "status": m.status,
            "distance": m.distance,
            "norm": m.norm,
            "margin": m.margin,
            "level": x.n,
        }
    )
    return report


def _cmd_check_nc(args) -> dict:
    kind, f, dims, domain = _load_function(args)
    samples = jsonio.load_list("gradedpoint", args.samples)
    if not samples:
        raise SchemaError("empty sample list")
    rng = sampling.rng_from_seed(args.seed)
    levels = sorted({p.n for p in samples})
    sims = []
    couplings = []
    for n in levels:
        for _ in range(args.sims):
            sims.append(sampling.random_invertible(rng, n))
            couplings.append(sampling.random_matrix(rng, n))
    rep = ncpoint.check_nc_axioms(
        f, samples, sims=sims, couplings=couplings, domain=domain,
        dims=dims, tol=args.tol,
    )
    report = _base_report(args)
    report.update(
        {
            "command": "check-nc",
            "evaluator": kind,
            "passed": rep.passed,
            "checks": rep.checks,
            "skipped": rep.skipped,
            "direct_sum_dev": rep.direct_sum_dev,
            "similarity_dev": rep.similarity_dev,
            "triangular_dev": rep.triangular_dev,
        }
    )
    return report


def _cmd_model_residual(args) -> dict:
    s = jsonio.load("modelsamples", args.samples)
    report = _base_report(args)
    report.update(
        {
            "command": "model-residual",
            "residual": model.model_residual(s),
            "diagonal_floor": model.diagonal_floor(s),
            "points": len(s.points),
            "mult": s.mult,
        }
    )
    return report


def _fit_summary(fit: realize.FitResult) -> dict:
    return {
        "gram_deviation": fit.gram_deviation,
        "rank": fit.rank,
        "train_residual": fit.train_residual,
        "padded_cols": fit.padded_cols,
        "holdout_indices": list(fit.holdout_indices),
        "holdout_deviation": fit.holdout_deviation,
    }


def _cmd_fit(args) -> dict:
    s = jsonio.load("modelsamples", args.samples)
    fit = realize.fit_lurking_isometry(
        s,
        gram_rtol=args.gram_rtol,
        rank_rtol=args.rank_rtol,
        holdout=not args.no_holdout,
    )
    report = _base_report(args)
    report.update(
        {
            "command": "fit",
            "realization": fit.realization.to_json(),
            **_fit_summary(fit),
        }
    )
    return report


def _cmd_corona(args) -> dict:
    payload = jsonio.load_json(args.input)
    try:
        delta = jsonio.decode("polymatrix", payload["delta"])
        epsilon = float(payload["epsilon"])
        mult = int(payload["mult"])
        points = [jsonio.decode("gradedpoint", p) for p in payload["points"]]
        psis = [
            [jsonio.decode("cmatrix", m).array for m in row]
            for row in payload["psis"]
        ]
        us = [jsonio.decode("cmatrix", m).array for m in payload["u"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed corona input: {exc}") from exc
    sol = realize.corona_solve(
        delta, points, psis, epsilon, us, mult, floor_slack=args.floor_slack
    )
    report = _base_report(args)
    report.update(
        {
            "command": "corona",
            "epsilon": sol.epsilon,
            "norm_bound": sol.norm_bound,
            "identity_residual": sol.identity_residual,
            "functions": len(psis),
            "realization": sol.fit.realization.to_json(),
            **_fit_summary(sol.fit),
        }
    )
    return report


def _cmd_approx(args) -> dict:
    r = jsonio.load("realization", args.realization)
    candidates = jsonio.load_list("polymatrix", args.cover)
    samples = jsonio.load_list("gradedpoint", args.samples)
    closed = approx_mod.close_under_direct_sums(samples, level_cap=args.level_cap)
    sel = approx_mod.select_covering_delta(closed, candidates)
    k = approx_mod.choose_truncation(args.tol, sel.t)
    bound = approx_mod.certify_error(r, k, sel.t)
    poly = approx_mod.expand_polynomial(r, k)
    report = _base_report(args)
    report.update(
        {
            "command": "approx",
            "cover_index": sel.index,
            "radius": sel.radius,
            "t": sel.t,
            "k": k,
            "bound": bound,
            "closure_size": len(closed),
            "term_count": poly.term_count(),
            "polynomial": poly.to_json(),
        }
    )
    return report


def _cmd_derive(args) -> dict:
    kind, f, dims, _ = _load_function(args)
    m = jsonio.load("gradedpoint", args.point)
    e = jsonio.load("gradedpoint", args.direction)
    val = ncpoint.nc_derivative(f, m, e, dims=dims)
    report = _base_report(args)
    report.update(
        {
            "command": "derive",
            "evaluator": kind,
            "level": m.n,
            "derivative": _matrix_json(val),
        }
    )
    return report


def _sampled_bound(f, delta, seed: int, trials: int = 200) -> float:
    rng = sampling.rng_from_seed(seed)
    worst = 0.0
    for i in range(trials):
        n = 1 + (i % 3)
        x = sampling.point_inside_gdelta(rng, delta, n)
        worst = max(worst, op_norm(f(x)))
    return worst


def _cmd_mero_certify(args) -> dict:
    src = _read_expr(args)
    ast, f = _expr_evaluator(src, args.vars)
    delta = jsonio.load("polymatrix", args.delta)
    if delta.d != args.vars:
        raise SchemaError(f"delta has d={delta.d} but --vars is {args.vars}")
    m = jsonio.load("gradedpoint", args.point)
    if args.bound is not None:
        bound_sup = args.bound
        bound_source = "asserted"
    else:
        bound_sup = _sampled_bound(f, delta, args.seed)
        bound_source = "sampled"
    cert = mero.inversion_certificate(
        f, delta, m, bound_sup, bound_source=bound_source
    )
    report = _base_report(args)
    report.update(
        {
            "command": "mero-certify",
            "expr": print_expr(ast),
            "bound_inv": cert.bound_inv,
            "bound_sup": cert.bound_sup,
            "bound_source": cert.bound_source,
            "c": [float(cert.c.real), float(cert.c.imag)],
            "p_coeffs": _pairs(cert.p_coeffs),
            "roots": _pairs(cert.roots),
            "p_residual": cert.p_residual,
        }
    )
    return report


def _cmd_mero_scan(args) -> dict:
    src = _read_expr(args)
    ast, _ = _expr_evaluator(src, args.vars)
    samples = jsonio.load_list("gradedpoint", args.samples)
    rep = mero.singular_scan(ast, samples)
    report = _base_report(args)
    report.update(
        {
            "command": "mero-scan",
            "expr": print_expr(ast),
            "checked": rep.total,
            "singular_count": rep.n_singular,
            "singular_paths": [list(p) for p in rep.paths()],
            "entries": [
                {
                    "index": e.index,
                    "level": e.level,
                    "singular": e.singular,
                    "path": None if e.path is None else list(e.path),
                    "value_norm": e.value_norm,
                }
                for e in rep.entries
            ],
        }
    )
    return report


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=1e-8, help="tolerance recorded in the report and used where the command needs one")
    p.add_argument("--seed", type=int, default=0, help="seed for any randomized sampling")
    p.add_argument("--level-cap", type=int, default=8, dest="level_cap", help="cap for direct sum closures")
    p.add_argument("--out", default=None, help="write the JSON report here instead of stdout")


def _add_expr_flags(p: argparse.ArgumentParser, require_vars: bool = True) -> None:
    p.add_argument("--expr", default=None, help="inline expression source")
    p.add_argument("--expr-file", default=None, dest="expr_file", help="file holding the expression")
    p.add_argument("--vars", type=int, required=require_vars, help="number of free variables d")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freeholo",
        description="Evaluate, check, fit, approximate, and certify free holomorphic functions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate an expression at a matrix point")
    _add_expr_flags(p)
    p.add_argument("--point", required=True, help="GradedPoint JSON file")
    _add_common(p)
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("member", help="test membership of a point in a basic free open set")
    p.add_argument("--delta", required=True, help="PolyMatrix JSON file")
    p.add_argument("--point", required=True, help="GradedPoint JSON file")
    p.add_argument("--margin", type=float, default=ncpoint.DEFAULT_MARGIN)
    _add_common(p)
    p.set_defaults(handler=_cmd_member)

    p = sub.add_parser("check-nc", help="check direct-sum and similarity behaviour on samples")
    _add_expr_flags(p, require_vars=False)
    p.add_argument("--realization", default=None, help="Realization JSON file (alternative to --expr)")
    p.add_argument("--samples", required=True, help="JSON array of GradedPoint")
    p.add_argument("--sims", type=int, default=3, help="random similarities per level")
    _add_common(p)
    p.set_defaults(handler=_cmd_check_nc)

    p = sub.add_parser("model-residual", help="residual of the model identity on sample data")
    p.add_argument("--samples", required=True, help="ModelSampleSet JSON file")
    _add_common(p)
    p.set_defaults(handler=_cmd_model_residual)

    p = sub.add_parser("fit", help="fit a realization to model sample data")
    p.add_argument("--samples", required=True, help="ModelSampleSet JSON file")
    p.add_argument("--gram-rtol", type=float, default=1e-6, dest="gram_rtol")
    p.add_argument("--rank-rtol", type=float, default=1e-8, dest="rank_rtol")
    p.add_argument("--no-holdout", action="store_true", dest="no_holdout")
    _add_common(p)
    p.set_defaults(handler=_cmd_fit)

    p = sub.add_parser("corona", help="solve a corona problem from pointwise data")
    p.add_argument("--input", required=True, help="JSON file with delta, epsilon, mult, points, psis, u")
    p.add_argument("--floor-slack", type=float, default=1e-9, dest="floor_slack")
    _add_common(p)
    p.set_defaults(handler=_cmd_corona)

    p = sub.add_parser("approx", help="certified polynomial approximation of a realized function")
    p.add_argument("--realization", required=True, help="Realization JSON file")
    p.add_argument("--cover", required=True, help="JSON array of candidate PolyMatrix grids")
    p.add_argument("--samples", required=True, help="JSON array of GradedPoint to cover")
    _add_common(p)
    p.set_defaults(handler=_cmd_approx)

    p = sub.add_parser("derive", help="directional derivative via the triangular embedding")
    _add_expr_flags(p, require_vars=False)
    p.add_argument("--realization", default=None, help="Realization JSON file (alternative to --expr)")
    p.add_argument("--point", required=True, help="GradedPoint JSON file (base point)")
    p.add_argument("--direction", required=True, help="GradedPoint JSON file (direction)")
    _add_common(p)
    p.set_defaults(handler=_cmd_derive)

    p = sub.add_parser("mero", help="meromorphic inversion tools")
    msub = p.add_subparsers(dest="mero_command", required=True)

    pc = msub.add_parser("certify", help="inversion certificate for f at an invertible value")
    _add_expr_flags(pc)
    pc.add_argument("--delta", required=True, help="PolyMatrix JSON file for the domain")
    pc.add_argument("--point", required=True, help="GradedPoint JSON file (the point M)")
    pc.add_argument("--bound", type=float, default=None, help="asserted sup bound B; sampled when omitted")
    _add_common(pc)
    pc.set_defaults(handler=_cmd_mero_certify)

    ps = msub.add_parser("scan", help="scan samples for singular inversions")
    _add_expr_flags(ps)
    ps.add_argument("--samples", required=True, help="JSON array of GradedPoint")
    _add_common(ps)
    ps.set_defaults(handler=_cmd_mero_scan)

    return parser


def _error_report(args, exc: Exception) -> dict:
    report = _base_report(args)
    info = {"type": type(exc).__name__, "message": str(exc)}
    for attr in ("offset", "deviation", "condition", "path", "index", "d"):
        if hasattr(exc, attr):
            val = getattr(exc, attr)
            if isinstance(val, tuple):
                val = list(val)
            info[attr] = val
    report["error"] = info
    return report


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = args.handler(args)
    except _INPUT_ERRORS as exc:
        _emit(_error_report(args, exc), None)
        return 2
    except FreeholoError as exc:
        _emit(_error_report(args, exc), None)
        return 1
    except OSError as exc:
        _emit(_error_report(args, exc), None)
        return 2
    _emit(report, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
