"""Command-line front-end.

Subcommands: solve | coeffs | bounds | reduce | compare | logistic.
Outputs are plot-ready CSV or JSON on stdout (or --out); identical inputs
produce byte-identical output.  Failures exit nonzero with a single
machine-parseable line ``error <code>: <message>`` on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import logistic as logi
from .bounds import certificate, delta_grid_report
from .errors import MissingInitialStateError, SPSError
from .fit import fit_sum, fit_tail_limits, recommended_tail_truncation
from .model import TruncationSpec, parse_document, validate
from .oracle import integrate, trajectory_csv
from .reduction import reduction_report
from .series import (
    build_coefficients,
    coefficients_csv,
    evaluate,
    scale_free_parameters,
)
from .spectral import analyze

DEFAULT_TRUNCATION = TruncationSpec.per_index(3)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spseries",
        description="Closed-form exponential power series solutions for "
                    "quadratic ODE systems xdot = diag(x)(b + A x).")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_input=True):
        if needs_input:
            p.add_argument("input", help="system-definition JSON file")
        p.add_argument("--truncation", type=int, default=None, metavar="D",
                       help="per-index cap on multi-index components")
        p.add_argument("--total-degree", type=int, default=None, metavar="N",
                       help="total-degree cap (alternative to --truncation)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--out", default=None, help="output path (default stdout)")

    p_solve = sub.add_parser("solve", help="emit the fitted series trajectory")
    common(p_solve)
    p_solve.add_argument("--t-end", type=float, default=10.0)
    p_solve.add_argument("--step", type=float, default=1e-3)
    p_solve.add_argument("--fit", choices=("sum", "tail"), default="sum")

    p_cmp = sub.add_parser("compare", help="series vs reference integrator")
    common(p_cmp)
    p_cmp.add_argument("--t-end", type=float, default=10.0)
    p_cmp.add_argument("--step", type=float, default=1e-3)
    p_cmp.add_argument("--fit", choices=("sum", "tail"), default="sum")

    p_coef = sub.add_parser("coeffs", help="unit-parameter coefficient table")
    common(p_coef)

    p_bounds = sub.add_parser("bounds", help="convergence certificate")
    common(p_bounds)
    p_bounds.set_defaults(format="json")

    p_red = sub.add_parser("reduce", help="corrected reduced model report")
    common(p_red)
    p_red.add_argument("--keep", type=int, required=True, metavar="L",
                       help="number of leading variables to keep")
    p_red.set_defaults(format="json")

    p_log = sub.add_parser("logistic", help="1-D logistic ground truth")
    common(p_log, needs_input=False)
    p_log.add_argument("--r", type=float, required=True)
    p_log.add_argument("--k", type=float, required=True)
    p_log.add_argument("--x0", type=float, required=True)
    p_log.add_argument("--t-end", type=float, default=10.0)
    p_log.add_argument("--step", type=float, default=1e-3)
    return parser


def _load(args):
    with open(args.input, "r", encoding="utf-8") as fh:
        system, file_trunc = parse_document(fh.read())
    system = validate(system)
    if args.truncation is not None and args.total_degree is not None:
        raise SPSError("pass only one of --truncation / --total-degree")
    if args.truncation is not None:
        trunc = TruncationSpec.per_index(args.truncation)
    elif args.total_degree is not None:
        trunc = TruncationSpec.total_degree(args.total_degree)
    else:
        trunc = file_trunc or DEFAULT_TRUNCATION
    return system, trunc


def _fit_params(system, spec, coeffs, method, t_end):
    if system.x0 is None:
        raise MissingInitialStateError("this command requires x0 in the input file")
    if method == "sum":
        return fit_sum(coeffs, spec.lam, system.x0, t_ref=0.0).p
    cap = recommended_tail_truncation(spec.lam)
    deflation = build_coefficients(system, spec, TruncationSpec.per_index(cap))
    horizon = max(4.0, round(6.0 / abs(float(spec.lam[0])), 3))
    traj = integrate(system, system.x0, t_end=min(horizon, max(t_end, 4.0)),
                     step=1e-3)
    return fit_tail_limits(traj, spec.c, spec.lam, coeffs=deflation).p


def _grid(t_end: float, step: float) -> np.ndarray:
    n = max(1, int(round(t_end / step)))
    return np.arange(n + 1) * step


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def cmd_solve(args) -> str:
    system, trunc = _load(args)
    spec = analyze(system)
    coeffs = build_coefficients(system, spec, trunc)
    p = _fit_params(system, spec, coeffs, args.fit, args.t_end)
    fitted = scale_free_parameters(coeffs, p)
    times = _grid(args.t_end, args.step)
    values = evaluate(fitted, spec.lam, times)
    m = system.dim
    if args.format == "json":
        return json.dumps({
            "t": [float(t) for t in times],
            "sps": [[float(v) for v in row] for row in values],
            "free_params": [float(v) for v in p],
        })
    lines = [",".join(["t"] + [f"x{j + 1}_sps" for j in range(m)])]
    for t, row in zip(times, values):
        lines.append(",".join([_fmt(t)] + [_fmt(v) for v in row]))
    return "\n".join(lines) + "\n"


def cmd_compare(args) -> str:
    system, trunc = _load(args)
    spec = analyze(system)
    coeffs = build_coefficients(system, spec, trunc)
    p = _fit_params(system, spec, coeffs, args.fit, args.t_end)
    fitted = scale_free_parameters(coeffs, p)
    traj = integrate(system, system.x0, t_end=args.t_end, step=args.step)
    times = traj.times
    sps = evaluate(fitted, spec.lam, times)
    err = np.max(np.abs(sps - traj.states), axis=1)
    cert = certificate(system, spec, fitted_params=p)
    past = times >= cert.t0
    sup_err = float(np.max(err[past])) if np.any(past) else float("nan")
    m = system.dim
    if args.format == "json":
        return json.dumps({
            "t": [float(t) for t in times],
            "sps": [[float(v) for v in row] for row in sps],
            "oracle": [[float(v) for v in row] for row in traj.states],
            "error": [float(v) for v in err],
            "t0": cert.t0,
            "sup_error_past_t0": sup_err,
        })
    header = (["t"] + [f"x{j + 1}_sps" for j in range(m)]
              + [f"x{j + 1}_oracle" for j in range(m)] + ["max_error"])
    lines = [",".join(header)]
    for i, t in enumerate(times):
        lines.append(",".join(
            [_fmt(t)] + [_fmt(v) for v in sps[i]]
            + [_fmt(v) for v in traj.states[i]] + [_fmt(err[i])]))
    lines.append(f"# t0,{_fmt(cert.t0)}")
    lines.append(f"# sup_error_past_t0,{_fmt(sup_err)}")
    return "\n".join(lines) + "\n"


def cmd_coeffs(args) -> str:
    system, trunc = _load(args)
    spec = analyze(system)
    coeffs = build_coefficients(system, spec, trunc)
    if args.format == "json":
        return json.dumps({
            "indices": [list(n) for n in coeffs],
            "alpha": [[float(v) for v in coeffs[n]] for n in coeffs],
        })
    return coefficients_csv(coeffs)


def cmd_bounds(args) -> str:
    system, _ = _load(args)
    spec = analyze(system)
    p = None
    if system.x0 is not None:
        cap = recommended_tail_truncation(spec.lam)
        deflation = build_coefficients(system, spec, TruncationSpec.per_index(cap))
        horizon = max(4.0, round(6.0 / abs(float(spec.lam[0])), 3))
        traj = integrate(system, system.x0, t_end=horizon, step=1e-3)
        p = fit_tail_limits(traj, spec.c, spec.lam, coeffs=deflation).p
    cert = certificate(system, spec, fitted_params=p)
    grid = delta_grid_report(system, spec, fitted_params=p)
    doc = json.loads(cert.to_json())
    doc["delta_grid"] = grid
    if args.format == "json":
        return json.dumps(doc, indent=2) + "\n"
    lines = ["key,value"]
    for key, value in doc.items():
        if key == "delta_grid":
            continue
        lines.append(f"{key},{value}")
    return "\n".join(lines) + "\n"


def cmd_reduce(args) -> str:
    system, _ = _load(args)
    report = reduction_report(system, args.keep)
    if args.format == "json":
        return report + "\n"
    doc = json.loads(report)
    lines = ["key,value"]
    for key, value in doc.items():
        lines.append(f"{key},{json.dumps(value)}")
    return "\n".join(lines) + "\n"


def cmd_logistic(args) -> str:
    params = logi.LogisticParams(r=args.r, k=args.k, x0=args.x0)
    n_max = args.truncation if args.truncation is not None else 30
    if args.format == "json":
        return json.dumps({
            "r": params.r, "k": params.k, "x0": params.x0,
            "alpha": [float(v) for v in logi.series_coefficients(params, n_max)],
            "t0": logi.t0_exact(params),
            "t0_unclamped": logi.t0_unclamped(params),
        }) + "\n"
    times = _grid(args.t_end, args.step)
    closed = logi.closed_form(params, times)
    series = logi.series_value(params, n_max, times)
    lines = ["t,x_closed,x_series"]
    for t, xc, xs in zip(times, closed, series):
        lines.append(f"{_fmt(t)},{_fmt(xc)},{_fmt(xs)}")
    return "\n".join(lines) + "\n"


_COMMANDS = {
    "solve": cmd_solve,
    "compare": cmd_compare,
    "coeffs": cmd_coeffs,
    "bounds": cmd_bounds,
    "reduce": cmd_reduce,
    "logistic": cmd_logistic,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        text = _COMMANDS[args.command](args)
    except SPSError as exc:
        print(f"error {exc.code}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error io: {exc}", file=sys.stderr)
        return 1
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
