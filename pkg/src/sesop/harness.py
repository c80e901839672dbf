"""Noise generation, seeded runs, delta sweeps, solver comparisons, and
persistence of traces and reports.

Reports carry the PRNG algorithm identifier and seed so every number in
them can be regenerated exactly.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import os
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import ForwardProblem
from .geometry import RealVector, as_vector
from .operators import ForwardOperator
from .solvers import (
    IterationTrace,
    SolverConfig,
    solve_landweber_variant,
    solve_resesop_nonlinear,
    solve_resesop_nonlinear_two,
)

log = logging.getLogger(__name__)

# np.random.default_rng backs every noise draw.
RNG_ALGORITHM = "pcg64"

SOLVERS = {
    "sesop": solve_resesop_nonlinear,
    "resesop2": solve_resesop_nonlinear_two,
    "landweber": solve_landweber_variant,
}

TRACE_COLUMNS = (
    "n", "residual_norm", "error_norm", "alpha", "xi",
    "step_type", "gamma", "descent_s", "t_current", "t_previous",
)


@dataclass(frozen=True)
class NoiseSpec:
    """Noise level and seed for one synthetic measurement."""

    delta: float
    seed: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.delta) or self.delta < 0.0:
            raise ValueError("delta must be finite and >= 0")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")


def add_noise(y: RealVector, spec: NoiseSpec) -> RealVector:
    """y + delta * e with e a seeded random unit vector, so the noise norm
    is exactly delta (to rounding)."""
    y = as_vector(y)
    if spec.delta == 0.0:
        return y.copy()
    rng = np.random.default_rng(spec.seed)
    e = rng.standard_normal(y.size)
    return y + (spec.delta / float(np.linalg.norm(e))) * e


def solver_names() -> list[str]:
    return sorted(SOLVERS)


def _resolve_solver(solver_name: str):
    try:
        return SOLVERS[solver_name]
    except KeyError:
        raise ValueError(
            f"unknown solver {solver_name!r}; available: {', '.join(solver_names())}"
        ) from None


def run_once(
    problem: ForwardProblem,
    solver_name: str,
    config: SolverConfig,
    spec: NoiseSpec,
) -> IterationTrace:
    """One seeded solver run on synthetic noisy data."""
    solve = _resolve_solver(solver_name)
    y_noisy = add_noise(problem.y_exact, spec)
    trace = solve(problem, config, spec.delta, y_noisy)
    log.info(
        "%s/%s delta=%g: %s after %d steps (residual %.3e, error %.3e)",
        problem.name, solver_name, spec.delta, trace.stop_reason, trace.steps,
        trace.final.residual_norm, trace.final.error_norm,
    )
    return trace


@dataclass(frozen=True)
class SweepRow:
    delta: float
    n_star: int | None
    final_residual: float
    final_error: float
    wall_time_s: float


@dataclass(frozen=True)
class SweepReport:
    """Regularization study: one solver, one seed, descending noise levels.

    failed is set when any row did not stop by the discrepancy criterion;
    error_trend_ok compares the endpoint errors (smallest delta vs largest).
    """

    problem: str
    solver: str
    tau: float
    rows: tuple[SweepRow, ...]
    seed: int
    failed: bool
    error_trend_ok: bool
    config: SolverConfig
    rng_algorithm: str = RNG_ALGORITHM

    def __post_init__(self) -> None:
        deltas = [row.delta for row in self.rows]
        if any(b >= a for a, b in zip(deltas, deltas[1:])):
            raise ValueError("sweep rows must be ordered by descending delta")
        object.__setattr__(self, "rows", tuple(self.rows))

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "solver": self.solver,
            "tau": self.tau,
            "rows": [dataclasses.asdict(row) for row in self.rows],
            "seed": self.seed,
            "failed": self.failed,
            "error_trend_ok": self.error_trend_ok,
            "rng_algorithm": self.rng_algorithm,
            "config": dataclasses.asdict(self.config),
        }


def regularization_sweep(
    problem: ForwardProblem,
    solver_name: str,
    config: SolverConfig,
    deltas,
    seed: int,
) -> SweepReport:
    """Run one solver across strictly descending noise levels, same seed."""
    deltas = [float(d) for d in deltas]
    if not deltas:
        raise ValueError("need at least one delta")
    if any(not d > 0.0 for d in deltas):
        raise ValueError("sweep deltas must be strictly positive")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("sweep deltas must be strictly descending")
    _resolve_solver(solver_name)

    rows = []
    tau = None
    failed = False
    for delta in deltas:
        start = time.perf_counter()
        trace = run_once(problem, solver_name, config, NoiseSpec(delta, seed))
        elapsed = time.perf_counter() - start
        tau = trace.tau
        if trace.stop_reason != "discrepancy":
            failed = True
        rows.append(
            SweepRow(
                delta=delta,
                n_star=trace.stop_index,
                final_residual=trace.final.residual_norm,
                final_error=trace.final.error_norm,
                wall_time_s=elapsed,
            )
        )
    return SweepReport(
        problem=problem.name,
        solver=solver_name,
        tau=tau,
        rows=tuple(rows),
        seed=seed,
        failed=failed,
        error_trend_ok=rows[-1].final_error < rows[0].final_error,
        config=config,
    )


class CountingOperator(ForwardOperator):
    """Delegating wrapper that counts forward and derivative applications."""

    def __init__(self, inner: ForwardOperator) -> None:
        super().__init__(inner.dim_x, inner.dim_y)
        self.inner = inner
        self.is_linear = inner.is_linear
        self.forward_evals = 0
        self.deriv_evals = 0
        self.adjoint_evals = 0

    def reset(self) -> None:
        self.forward_evals = 0
        self.deriv_evals = 0
        self.adjoint_evals = 0

    def apply(self, x):
        self.forward_evals += 1
        return self.inner.apply(x)

    def deriv_apply(self, x, v):
        self.deriv_evals += 1
        return self.inner.deriv_apply(x, v)

    def deriv_adjoint_apply(self, x, w):
        self.adjoint_evals += 1
        return self.inner.deriv_adjoint_apply(x, w)


@dataclass(frozen=True)
class CompareRow:
    solver: str
    n_star: int | None
    final_error: float
    forward_evals: int
    adjoint_evals: int


@dataclass(frozen=True)
class ComparisonReport:
    """Per-solver stopping indices and operation counts on shared noisy data."""

    problem: str
    delta: float
    seed: int
    tau: float
    rows: tuple[CompareRow, ...]
    failed: bool
    traces: dict[str, IterationTrace]
    rng_algorithm: str = RNG_ALGORITHM

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "delta": self.delta,
            "seed": self.seed,
            "tau": self.tau,
            "rows": [dataclasses.asdict(row) for row in self.rows],
            "failed": self.failed,
            "rng_algorithm": self.rng_algorithm,
        }


def compare_solvers(
    problem: ForwardProblem,
    solver_names_: list[str],
    config: SolverConfig,
    spec: NoiseSpec,
) -> ComparisonReport:
    """Run >= 2 solvers on identical noisy data with instrumented operators."""
    names = list(solver_names_)
    if len(names) < 2:
        raise ValueError("need at least two solvers to compare")
    if len(set(names)) != len(names):
        raise ValueError("duplicate solver names in comparison")
    solves = [(name, _resolve_solver(name)) for name in names]
    y_noisy = add_noise(problem.y_exact, spec)

    rows = []
    traces: dict[str, IterationTrace] = {}
    tau = None
    failed = False
    for name, solve in solves:
        counting = CountingOperator(problem.operator)
        counted_problem = dataclasses.replace(problem, operator=counting)
        counting.reset()  # construction re-verifies y_exact = F(x_plus)
        trace = solve(counted_problem, config, spec.delta, y_noisy)
        tau = trace.tau
        if trace.stop_reason != "discrepancy":
            failed = True
        rows.append(
            CompareRow(
                solver=name,
                n_star=trace.stop_index,
                final_error=trace.final.error_norm,
                forward_evals=counting.forward_evals,
                adjoint_evals=counting.adjoint_evals,
            )
        )
        traces[name] = trace
    return ComparisonReport(
        problem=problem.name,
        delta=spec.delta,
        seed=spec.seed,
        tau=tau,
        rows=tuple(rows),
        failed=failed,
        traces=traces,
    )


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary file in the target directory plus rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_trace_csv(trace: IterationTrace, path) -> None:
    """Persist a trace with the fixed column set, empty cells for absent
    values (terminal rows have no stripe or step data)."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for rec in trace.records:
        writer.writerow(
            [
                _format_cell(rec.n),
                _format_cell(rec.residual_norm),
                _format_cell(rec.error_norm),
                _format_cell(rec.stripe.alpha if rec.stripe is not None else None),
                _format_cell(rec.stripe.xi if rec.stripe is not None else None),
                rec.step_type,
                _format_cell(rec.gamma),
                _format_cell(rec.descent_s),
                _format_cell(rec.t_current),
                _format_cell(rec.t_previous),
            ]
        )
    atomic_write_text(path, buffer.getvalue())


def write_json_report(report, path) -> None:
    atomic_write_text(path, json.dumps(report.to_dict(), indent=2) + "\n")
