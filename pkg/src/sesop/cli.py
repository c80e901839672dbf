"""Command line interface.

Four subcommands: ``check`` verifies a problem's operator assumptions,
``run`` executes one seeded reconstruction, ``sweep`` runs a descending
noise-level study, and ``compare`` races solvers on shared data.  The
report-writing commands place a rendered figure next to each CSV/JSON
output unless --no-plot is given.

Exit codes: 0 success, 2 usage or failed check, 3 non-convergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .corpus import ForwardProblem, corpus_names, get_problem, load_problem_json
from .geometry import GeometryError
from .harness import (
    NoiseSpec,
    atomic_write_text,
    compare_solvers,
    regularization_sweep,
    run_once,
    solver_names,
    write_json_report,
    write_trace_csv,
)
from .operators import EstimationFailedError, check_adjoint, check_frechet
from .solvers import SolverConfig, SolverError

log = logging.getLogger(__name__)

OUT_DIR_ENV = "SESOP_OUT_DIR"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NO_CONVERGENCE = 3

ADJOINT_PASS = 1e-10
SLOPE_BAND = (1.9, 2.1)
_DEFAULTS = SolverConfig()


def _resolve_problem(text: str) -> ForwardProblem:
    if text in corpus_names():
        return get_problem(text)
    if text.endswith(".json") or os.sep in text:
        return load_problem_json(text)
    return get_problem(text)  # raises with the list of known names


def _parse_tau(text: str) -> float | None:
    if text.strip().lower() == "auto":
        return None
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"invalid tau {text!r}: expected 'auto' or a number") from None


def _parse_list(text: str, what: str) -> list[str]:
    items = [tok.strip() for tok in text.split(",") if tok.strip()]
    if not items:
        raise ValueError(f"empty {what} list")
    return items


def _parse_deltas(text: str) -> list[float]:
    try:
        return [float(tok) for tok in _parse_list(text, "delta")]
    except ValueError as exc:
        raise ValueError(f"invalid delta list {text!r}: {exc}") from None


def _build_config(args) -> SolverConfig:
    return SolverConfig(
        tau=_parse_tau(args.tau),
        max_iter=args.max_iter,
        history_depth=args.history_depth,
    )


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_DIR_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _stop_summary(trace) -> str:
    n_star = "-" if trace.stop_index is None else str(trace.stop_index)
    return (
        f"stop reason:    {trace.stop_reason}\n"
        f"n*:             {n_star}\n"
        f"final residual: {trace.final.residual_norm:.6e}\n"
        f"final error:    {trace.final.error_norm:.6e}\n"
        f"tau:            {trace.tau:g}"
    )


def cmd_check(args) -> int:
    problem = _resolve_problem(args.problem)
    op, ball, cert = problem.operator, problem.ball, problem.certificate

    defect = check_adjoint(op, ball, samples=args.samples)
    slope = check_frechet(op, ball)
    center_dist = float(np.linalg.norm(problem.x_plus - ball.center))
    data_defect = float(np.linalg.norm(op.apply(problem.x_plus) - problem.y_exact))

    adjoint_ok = defect <= ADJOINT_PASS
    if op.is_linear:
        slope_ok = math.isinf(slope)
        slope_text = "exact (linear operator)"
    else:
        slope_ok = SLOPE_BAND[0] <= slope <= SLOPE_BAND[1]
        slope_text = f"{slope:.4f} (expected within [{SLOPE_BAND[0]}, {SLOPE_BAND[1]}])"
    ctc_ok = 0.0 <= cert.ctc < 1.0
    if cert.ctc_provenance == "empirical":
        ctc_text = f"{cert.ctc:.6f} (empirical: sampled estimate x 1.5 safety factor)"
    else:
        ctc_text = f"{cert.ctc:.6f} (analytic)"
    cf_ok = math.isfinite(cert.c_f) and cert.c_f > 0.0
    halfball_ok = center_dist <= 0.5 * ball.radius * (1.0 + 1e-12)
    data_ok = data_defect <= 1e-12 * (1.0 + float(np.linalg.norm(problem.y_exact)))

    rows = [
        ("adjoint defect", f"{defect:.3e} (tolerance {ADJOINT_PASS:g})", adjoint_ok),
        ("taylor slope", slope_text, slope_ok),
        ("ctc", ctc_text, ctc_ok),
        ("c_F", f"{cert.c_f:.6f}", cf_ok),
        ("half-ball", f"|x_plus - x0| = {center_dist:.4f} <= {0.5 * ball.radius:.4f}",
         halfball_ok),
        ("data consistency", f"|F(x_plus) - y| = {data_defect:.3e}", data_ok),
    ]
    print(f"problem: {problem.name} (R^{op.dim_x} -> R^{op.dim_y})")
    for label, detail, ok in rows:
        print(f"  {label:<17} {'pass' if ok else 'FAIL'}  {detail}")
    overall = all(ok for _, _, ok in rows)
    print(f"overall: {'PASS' if overall else 'FAIL'}")

    if args.json_path:
        payload = {
            "problem": problem.name,
            "dim_x": op.dim_x,
            "dim_y": op.dim_y,
            "certificate": cert.to_dict(),
            "checks": {
                "adjoint_defect": defect,
                "taylor_slope": None if math.isinf(slope) else slope,
                "center_distance": center_dist,
                "data_defect": data_defect,
                "results": {label: ok for label, _, ok in rows},
            },
            "pass": overall,
        }
        atomic_write_text(args.json_path, json.dumps(payload, indent=2) + "\n")
        print(f"wrote {args.json_path}")
    return EXIT_OK if overall else EXIT_USAGE


def cmd_run(args) -> int:
    problem = _resolve_problem(args.problem)
    config = _build_config(args)
    trace = run_once(problem, args.solver, config, NoiseSpec(args.delta, args.seed))

    out = _out_dir(args)
    stem = f"{problem.name}_{args.solver}"
    csv_path = out / f"{stem}_trace.csv"
    write_trace_csv(trace, csv_path)
    print(f"wrote {csv_path}")
    if not args.no_plot:
        from .plots import plot_trace

        fig_path = out / f"{stem}_trace.png"
        plot_trace(trace, fig_path, title=f"{problem.name} / {args.solver}, "
                                          f"delta={args.delta:g}")
        print(f"wrote {fig_path}")
    print(_stop_summary(trace))
    return EXIT_OK if trace.stop_reason == "discrepancy" else EXIT_NO_CONVERGENCE


def cmd_sweep(args) -> int:
    problem = _resolve_problem(args.problem)
    config = _build_config(args)
    deltas = _parse_deltas(args.deltas)
    report = regularization_sweep(problem, args.solver, config, deltas, args.seed)

    out = _out_dir(args)
    stem = f"{problem.name}_{args.solver}"
    json_path = out / f"{stem}_sweep.json"
    write_json_report(report, json_path)
    print(f"wrote {json_path}")
    if not args.no_plot:
        from .plots import plot_sweep

        fig_path = out / f"{stem}_sweep.png"
        plot_sweep(report, fig_path)
        print(f"wrote {fig_path}")

    print(f"{'delta':>10} {'n*':>6} {'final_residual':>15} {'final_error':>13} "
          f"{'wall_time_s':>12}")
    for row in report.rows:
        n_star = "-" if row.n_star is None else str(row.n_star)
        print(f"{row.delta:>10.2e} {n_star:>6} {row.final_residual:>15.6e} "
              f"{row.final_error:>13.6e} {row.wall_time_s:>12.4f}")
    print(f"tau: {report.tau:g}")
    print(f"error trend (smallest vs largest delta): "
          f"{'ok' if report.error_trend_ok else 'NOT ok'}")
    if report.failed:
        print("sweep failed: at least one run did not satisfy the discrepancy criterion")
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def cmd_compare(args) -> int:
    problem = _resolve_problem(args.problem)
    config = _build_config(args)
    names = _parse_list(args.solvers, "solver")
    report = compare_solvers(problem, names, config, NoiseSpec(args.delta, args.seed))

    out = _out_dir(args)
    json_path = out / f"{problem.name}_compare.json"
    write_json_report(report, json_path)
    print(f"wrote {json_path}")
    if not args.no_plot:
        from .plots import plot_compare

        fig_path = out / f"{problem.name}_compare.png"
        plot_compare(report, fig_path)
        print(f"wrote {fig_path}")

    print(f"{'solver':<12} {'n*':>6} {'final_error':>13} {'forward':>8} {'adjoint':>8}")
    for row in report.rows:
        n_star = "-" if row.n_star is None else str(row.n_star)
        print(f"{row.solver:<12} {n_star:>6} {row.final_error:>13.6e} "
              f"{row.forward_evals:>8} {row.adjoint_evals:>8}")
    if report.failed:
        print("comparison failed: at least one run did not satisfy the "
              "discrepancy criterion")
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def _add_problem_arg(parser) -> None:
    parser.add_argument(
        "--problem", required=True,
        help=f"corpus name ({', '.join(corpus_names())}) or path to a problem JSON file",
    )


def _add_solver_opts(parser) -> None:
    parser.add_argument("--tau", default="auto",
                        help="discrepancy factor; 'auto' picks 1.2x the admissible bound")
    parser.add_argument("--seed", type=int, default=0, help="noise seed")
    parser.add_argument("--max-iter", type=int, default=_DEFAULTS.max_iter)
    parser.add_argument("--history-depth", type=int, default=_DEFAULTS.history_depth,
                        help="stripe window for the sesop solver")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v solver summaries, -vv per-iteration log")

    outopts = argparse.ArgumentParser(add_help=False)
    outopts.add_argument("--out", default=None,
                         help=f"output directory (default: ${OUT_DIR_ENV} or '.')")
    outopts.add_argument("--no-plot", action="store_true",
                         help="skip figure rendering")

    parser = argparse.ArgumentParser(
        prog="sesop",
        description="Stripe-based subspace solvers for ill-posed inverse problems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", parents=[common],
                           help="verify operator assumptions and the certificate")
    _add_problem_arg(check)
    check.add_argument("--samples", type=int, default=50,
                       help="sample count for the adjoint check")
    check.add_argument("--json", dest="json_path", default=None,
                       help="also write the check report to this JSON path")
    check.set_defaults(func=cmd_check)

    run_p = sub.add_parser("run", parents=[common, outopts],
                           help="one seeded reconstruction; writes trace CSV and figure")
    _add_problem_arg(run_p)
    run_p.add_argument("--solver", required=True,
                       help=f"one of: {', '.join(solver_names())}")
    run_p.add_argument("--delta", type=float, required=True,
                       help="noise level (0 selects exact data)")
    _add_solver_opts(run_p)
    run_p.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", parents=[common, outopts],
                           help="descending noise-level study; writes JSON and figure")
    _add_problem_arg(sweep)
    sweep.add_argument("--solver", required=True,
                       help=f"one of: {', '.join(solver_names())}")
    sweep.add_argument("--deltas", required=True,
                       help="comma-separated strictly descending noise levels")
    _add_solver_opts(sweep)
    sweep.set_defaults(func=cmd_sweep)

    compare = sub.add_parser("compare", parents=[common, outopts],
                             help="race solvers on shared noisy data")
    _add_problem_arg(compare)
    compare.add_argument("--solvers", required=True,
                         help="comma-separated solver names, no duplicates")
    compare.add_argument("--delta", type=float, required=True)
    _add_solver_opts(compare)
    compare.set_defaults(func=cmd_compare)
    return parser


def _setup_logging(verbosity: int) -> None:
    level = logging.WARNING - 10 * min(verbosity, 2)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(args.verbose)
    try:
        return args.func(args)
    except (ValueError, EstimationFailedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, GeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
