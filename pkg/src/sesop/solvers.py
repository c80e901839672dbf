"""Stripe-projection iterations for linear and nonlinear inverse problems.

All solvers share one engine.  Per iterate it evaluates the residual
R_n = F(x_n) - y_data, builds the stripe

    H(u_n, alpha_n, xi_n),  u_n = F'(x_n)* R_n,
    alpha_n = <u_n, x_n> - ||R_n||^2,
    xi_n = (delta + ctc (||R_n|| + delta)) ||R_n||,

and steps by metric projection.  Three step modes exist: a single stripe
per step (Landweber variant), the projection onto the intersection of the
last N stripes, and the two-direction scheme that needs at most two
sequential hyperplane projections per iterate.  Every mode records a full
iteration trace.

Search directions are fixed to the residual gradients w_i = R_i; the
convergence statements quoted in the README are proved for that choice.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .corpus import ForwardProblem
from .geometry import (
    GAMMA_MIN,
    TOL_FEAS_BASE,
    DegenerateDirectionError,
    Halfspace,
    NearParallelError,
    ProjectionContractError,
    RealVector,
    Stripe,
    as_vector,
    feasibility_tol,
    project_stripe_intersection_info,
    project_two_halfspaces,
)

log = logging.getLogger(__name__)

# Exact-data runs stop when the residual norm falls below this.
EXACT_RESIDUAL_TOL = 1e-10

# Gradient norms below this fraction of c_f * ||R|| count as degenerate.
DEGENERATE_GRADIENT_RTOL = 1e-14

# Default tau is this factor times the strict lower bound (1+ctc)/(1-ctc).
TAU_DEFAULT_MARGIN = 1.2

STEP_TYPES = ("single", "double", "stopped")
STOP_REASONS = ("discrepancy", "max_iter", "degenerate_gradient")


class SolverError(RuntimeError):
    """Base class for solver-level failures."""


class StepCapExceededError(SolverError):
    """A projection coefficient exceeded the configured |t| cap."""


class IterationContractError(SolverError):
    """An iterate violated a relation the convergence theory guarantees."""


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters shared by all solvers.

    tau None means the default 1.2 * (1+ctc)/(1-ctc) for the problem the
    config is paired with; explicit values are validated against that bound
    at solve start.  history_depth is the window N of recent stripes used by
    the windowed solvers.
    """

    tau: float | None = None
    max_iter: int = 100_000
    history_depth: int = 2
    t_cap: float = 1e6
    gamma_min: float = GAMMA_MIN
    tol_feas: float = TOL_FEAS_BASE

    def __post_init__(self) -> None:
        if self.tau is not None and not self.tau > 0.0:
            raise ValueError("tau must be positive when given")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.history_depth < 1:
            raise ValueError("history_depth must be >= 1")
        if not self.t_cap > 0.0:
            raise ValueError("t_cap must be positive")
        if not 0.0 < self.gamma_min < 1.0:
            raise ValueError("gamma_min must lie in (0, 1)")
        if not self.tol_feas > 0.0:
            raise ValueError("tol_feas must be positive")


@dataclass(frozen=True)
class IterationRecord:
    """State at iterate x_n plus the step taken from it.

    Terminal records use step_type "stopped" and carry no stripe or step
    coefficients.  gamma is present exactly on double steps; t_previous on
    steps that used the previous direction.
    """

    n: int
    x: RealVector
    residual_norm: float
    error_norm: float | None
    stripe: Stripe | None
    step_type: str
    gamma: float | None
    descent_s: float
    t_current: float | None
    t_previous: float | None

    def __post_init__(self) -> None:
        if self.step_type not in STEP_TYPES:
            raise ValueError(f"unknown step_type {self.step_type!r}")
        if self.n < 0:
            raise ValueError("iteration index must be >= 0")
        if not self.residual_norm >= 0.0:
            raise ValueError("residual_norm must be >= 0")
        if not self.descent_s >= 0.0:
            raise ValueError("descent_s must be >= 0")
        if self.step_type == "stopped":
            if self.stripe is not None or self.t_current is not None:
                raise ValueError("terminal records carry no stripe or step data")
            if self.gamma is not None or self.t_previous is not None:
                raise ValueError("terminal records carry no stripe or step data")
        else:
            if self.stripe is None or self.t_current is None:
                raise ValueError("stepping records need a stripe and t_current")
            if (self.gamma is not None) != (self.step_type == "double"):
                raise ValueError("gamma is recorded exactly on double steps")
            if self.step_type == "double" and self.t_previous is None:
                raise ValueError("double steps need t_previous")
        object.__setattr__(self, "x", as_vector(self.x))


@dataclass(frozen=True)
class IterationTrace:
    """Complete record of one solver run.

    stop_index is the stopping index n*(delta) and is present exactly when
    the run stopped by the discrepancy criterion; warnings collect non-fatal
    diagnostics (ball exits, near-parallel fallbacks).
    """

    records: tuple[IterationRecord, ...]
    stop_index: int | None
    stop_reason: str
    tau: float
    delta: float
    warnings: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        records = tuple(self.records)
        if not records:
            raise ValueError("trace needs at least one record")
        if self.stop_reason not in STOP_REASONS:
            raise ValueError(f"unknown stop_reason {self.stop_reason!r}")
        if records[-1].step_type != "stopped":
            raise ValueError("last record must be terminal")
        if not self.tau > 0.0 or not self.delta >= 0.0:
            raise ValueError("need tau > 0 and delta >= 0")
        if self.stop_reason == "discrepancy":
            if self.stop_index != records[-1].n:
                raise ValueError("discrepancy stop must set stop_index = n*")
            threshold = self.tau * self.delta if self.delta > 0.0 else EXACT_RESIDUAL_TOL
            if records[-1].residual_norm > threshold:
                raise ValueError(
                    f"discrepancy stop with residual {records[-1].residual_norm:.6g} "
                    f"above threshold {threshold:.6g}"
                )
        elif self.stop_index is not None:
            raise ValueError("stop_index is defined only for discrepancy stops")
        object.__setattr__(self, "records", records)
        object.__setattr__(self, "warnings", tuple(self.warnings))

    @property
    def final(self) -> IterationRecord:
        return self.records[-1]

    @property
    def steps(self) -> int:
        """Number of projection steps actually taken."""
        return len(self.records) - 1


def discrepancy_bound(ctc: float) -> float:
    """Strict lower bound (1+ctc)/(1-ctc) any admissible tau must exceed."""
    if not 0.0 <= ctc < 1.0:
        raise ValueError("ctc must lie in [0, 1)")
    return (1.0 + ctc) / (1.0 - ctc)


def resolve_tau(config: SolverConfig, ctc: float) -> float:
    bound = discrepancy_bound(ctc)
    if config.tau is None:
        return TAU_DEFAULT_MARGIN * bound
    if config.tau <= bound:
        raise ValueError(
            f"tau = {config.tau:.6g} does not exceed (1+ctc)/(1-ctc) = {bound:.6g}"
        )
    return config.tau


def _gradient_stripe(
    problem: ForwardProblem,
    x: RealVector,
    u: RealVector,
    residual_norm: float,
    delta: float,
) -> Stripe:
    ctc = problem.certificate.ctc
    alpha = float(u @ x) - residual_norm * residual_norm
    xi = (delta + ctc * (residual_norm + delta)) * residual_norm
    return Stripe(u, alpha, xi)


def _require_in_ball(problem: ForwardProblem, x: RealVector) -> None:
    tol = 1e-9 * (1.0 + problem.ball.radius)
    if not problem.ball.contains(x, tol=tol):
        raise ValueError("x_i lies outside the certified domain ball")


def build_stripe_exact(problem: ForwardProblem, x_i: RealVector, w: RealVector) -> Stripe:
    """Exact-data stripe for direction w at iterate x_i.

    u = F'(x_i)* w, alpha = <u, x_i> - <w, F(x_i) - y>, and half-width
    ctc ||w|| ||R_i||; contains every solution of F(x) = y in the ball.
    """
    x_i = as_vector(x_i)
    w = as_vector(w)
    _require_in_ball(problem, x_i)
    residual = problem.operator.apply(x_i) - problem.y_exact
    u = problem.operator.deriv_adjoint_apply(x_i, w)
    if float(u @ u) == 0.0:
        raise DegenerateDirectionError("F'(x_i)* w vanishes; no stripe direction")
    alpha = float(u @ x_i) - float(w @ residual)
    xi = problem.certificate.ctc * float(np.linalg.norm(w)) * float(np.linalg.norm(residual))
    return Stripe(u, alpha, xi)


def build_stripe_noisy(
    problem: ForwardProblem,
    x_i: RealVector,
    w: RealVector,
    residual_i: float,
    delta: float,
) -> Stripe:
    """Noise-aware stripe for direction w at iterate x_i.

    residual_i is ||F(x_i) - y_delta||, and w must point along that residual
    (the solvers pass w = R_i itself), so <w, R_i> = ||w|| residual_i without
    access to the noisy data.  Half-width (delta + ctc (residual_i + delta)) ||w||
    keeps every exact solution inside whenever ||y_delta - y|| <= delta.
    """
    if delta < 0.0 or not np.isfinite(delta):
        raise ValueError("delta must be finite and >= 0")
    if residual_i < 0.0:
        raise ValueError("residual_i is a norm and must be >= 0")
    x_i = as_vector(x_i)
    w = as_vector(w)
    _require_in_ball(problem, x_i)
    u = problem.operator.deriv_adjoint_apply(x_i, w)
    if float(u @ u) == 0.0:
        raise DegenerateDirectionError("F'(x_i)* w vanishes; no stripe direction")
    w_norm = float(np.linalg.norm(w))
    alpha = float(u @ x_i) - w_norm * residual_i
    xi = (delta + problem.certificate.ctc * (residual_i + delta)) * w_norm
    return Stripe(u, alpha, xi)


@dataclass
class _Step:
    x_new: RealVector
    step_type: str
    descent: float
    t_current: float
    t_previous: float | None
    gamma: float | None


def _two_direction_step(
    x: RealVector,
    stripe: Stripe,
    prev: Stripe | None,
    gap: float,
    u_norm_sq: float,
    config: SolverConfig,
    warnings: list[str],
    n: int,
) -> _Step:
    t1 = gap / u_norm_sq
    x_tilde = x - t1 * stripe.u
    term1 = gap * gap / u_norm_sq

    def single() -> _Step:
        return _Step(x_tilde, "single", term1, t1, None, None)

    if prev is None:
        return single()
    prev_tol = feasibility_tol(prev.alpha, prev.xi, base=config.tol_feas)
    if not prev.contains(x, tol=prev_tol):
        raise IterationContractError(
            f"iteration {n}: iterate left the previous stripe "
            f"(offset {prev.offset(x):.6g}, half-width {prev.xi:.6g}); "
            "the certificate constants are inconsistent with this run"
        )
    off = prev.offset(x_tilde)
    if abs(off) <= prev.xi + prev_tol:
        return single()
    h1 = Halfspace(stripe.u, stripe.upper, "<=")
    if off > 0.0:
        h2 = Halfspace(prev.u, prev.upper, "<=")
    else:
        h2 = Halfspace(prev.u, prev.lower, ">=")
    try:
        rep = project_two_halfspaces(x, h1, h2)
    except NearParallelError as exc:
        warnings.append(f"iteration {n}: {exc}")
        return single()
    except ProjectionContractError as exc:
        warnings.append(f"iteration {n}: single-step fallback, {exc}")
        return single()
    if rep.steps_used == 1:
        return _Step(rep.point, "single", sum(rep.descent_terms), rep.coefficients[0], None, None)
    if rep.gamma < config.gamma_min:
        warnings.append(
            f"iteration {n}: gamma {rep.gamma:.3e} below configured floor "
            f"{config.gamma_min:.0e}; single-step fallback"
        )
        return single()
    return _Step(
        rep.point,
        "double",
        sum(rep.descent_terms),
        rep.coefficients[0],
        rep.coefficients[1],
        rep.gamma,
    )


def _check_cap(coefficients, cap: float, n: int) -> None:
    for t in coefficients:
        if t is not None and abs(t) > cap:
            raise StepCapExceededError(
                f"iteration {n}: projection coefficient {t:.6g} exceeds "
                f"the configured cap {cap:.6g}"
            )


def _run_engine(
    problem: ForwardProblem,
    config: SolverConfig,
    *,
    delta: float,
    y_data: RealVector,
    window: int,
    two_direction: bool,
) -> IterationTrace:
    op = problem.operator
    ctc = problem.certificate.ctc
    c_f = problem.certificate.c_f
    tau = resolve_tau(config, ctc)
    threshold = tau * delta if delta > 0.0 else EXACT_RESIDUAL_TOL
    debug = log.isEnabledFor(logging.DEBUG)

    x = np.array(problem.ball.center, dtype=float)
    records: list[IterationRecord] = []
    warnings: list[str] = []
    past: deque[Stripe] = deque(maxlen=max(window - 1, 0))
    prev_stripe: Stripe | None = None
    left_ball = False
    stalled = False

    def terminal(n: int, x: RealVector, rnorm: float, err: float) -> IterationRecord:
        return IterationRecord(
            n=n, x=x, residual_norm=rnorm, error_norm=err, stripe=None,
            step_type="stopped", gamma=None, descent_s=0.0,
            t_current=None, t_previous=None,
        )

    n = 0
    while True:
        residual = op.apply(x) - y_data
        rnorm = float(np.linalg.norm(residual))
        err = float(np.linalg.norm(problem.x_plus - x))
        if rnorm <= threshold:
            records.append(terminal(n, x, rnorm, err))
            stop_reason, stop_index = "discrepancy", n
            break
        if n >= config.max_iter:
            records.append(terminal(n, x, rnorm, err))
            stop_reason, stop_index = "max_iter", None
            break
        u = op.deriv_adjoint_apply(x, residual)
        u_norm_sq = float(u @ u)
        if math.sqrt(u_norm_sq) <= DEGENERATE_GRADIENT_RTOL * max(1.0, c_f) * rnorm:
            records.append(terminal(n, x, rnorm, err))
            stop_reason, stop_index = "degenerate_gradient", None
            break

        stripe = _gradient_stripe(problem, x, u, rnorm, delta)
        gap = rnorm * (rnorm - delta - ctc * (rnorm + delta))
        if gap <= 0.0:
            raise IterationContractError(
                f"iteration {n}: residual {rnorm:.6g} exceeds the stopping "
                f"threshold {threshold:.6g} yet the descent gap is {gap:.6g}; "
                f"check tau={tau:.6g}, ctc={ctc:.6g}, delta={delta:.6g}"
            )

        if two_direction:
            step = _two_direction_step(
                x, stripe, prev_stripe, gap, u_norm_sq, config, warnings, n
            )
            _check_cap((step.t_current, step.t_previous), config.t_cap, n)
            prev_stripe = stripe
        elif window == 1:
            t1 = gap / u_norm_sq
            _check_cap((t1,), config.t_cap, n)
            step = _Step(x - t1 * u, "single", gap * gap / u_norm_sq, t1, None, None)
        else:
            stripes = [stripe] + list(reversed(past))
            point, coeffs = project_stripe_intersection_info(x, stripes)
            _check_cap(coeffs, config.t_cap, n)
            diff = point - x
            step = _Step(
                point,
                "single",
                float(diff @ diff),
                float(coeffs[0]),
                float(coeffs[1]) if len(coeffs) > 1 else None,
                None,
            )
            past.append(stripe)
            if step.descent == 0.0 and not stalled:
                # The stripe violation has dropped below the projection's
                # feasibility tolerance; the iteration is stationary from here.
                stalled = True
                msg = (
                    f"iteration {n}: projection step vanished at residual "
                    f"{rnorm:.6g} (violation below feasibility tolerance); "
                    "the iteration is stationary"
                )
                warnings.append(msg)
                log.warning("%s: %s", problem.name, msg)

        if not left_ball and not problem.ball.contains(
            step.x_new, tol=config.tol_feas * (1.0 + problem.ball.radius)
        ):
            left_ball = True
            msg = (
                f"iteration {n}: iterate left the certified ball "
                f"(distance {float(np.linalg.norm(step.x_new - problem.ball.center)):.6g} "
                f"> radius {problem.ball.radius:.6g}); ctc may be under-certified"
            )
            warnings.append(msg)
            log.warning("%s: %s", problem.name, msg)

        if debug:
            log.debug(
                "%s n=%d residual=%.3e error=%.3e step=%s descent=%.3e",
                problem.name, n, rnorm, err, step.step_type, step.descent,
            )
        records.append(
            IterationRecord(
                n=n, x=x, residual_norm=rnorm, error_norm=err, stripe=stripe,
                step_type=step.step_type, gamma=step.gamma, descent_s=step.descent,
                t_current=step.t_current, t_previous=step.t_previous,
            )
        )
        x = step.x_new
        n += 1

    return IterationTrace(
        records=tuple(records),
        stop_index=stop_index,
        stop_reason=stop_reason,
        tau=tau,
        delta=delta,
        warnings=tuple(warnings),
    )


def _validate_noisy_data(problem: ForwardProblem, delta: float, y_noisy) -> RealVector:
    if not np.isfinite(delta) or delta < 0.0:
        raise ValueError("delta must be finite and >= 0")
    y_noisy = as_vector(y_noisy)
    if y_noisy.size != problem.operator.dim_y:
        raise ValueError(
            f"noisy data has size {y_noisy.size}, expected {problem.operator.dim_y}"
        )
    gap = float(np.linalg.norm(y_noisy - problem.y_exact))
    slack = 1e-12 * (1.0 + float(np.linalg.norm(problem.y_exact)))
    if gap > delta + slack:
        raise ValueError(
            f"||y_noisy - y_exact|| = {gap:.6g} exceeds the claimed delta = {delta:.6g}"
        )
    return y_noisy


def _require_linear(problem: ForwardProblem) -> None:
    if not problem.operator.is_linear:
        raise ValueError(f"problem {problem.name!r} is not linear")


def solve_sesop_linear_exact(
    problem: ForwardProblem, config: SolverConfig, directions_per_step: int = 2
) -> IterationTrace:
    """Exact-data sequential subspace iteration for a linear problem.

    Projects onto the intersection of the hyperplanes induced by the last
    directions_per_step residual gradients; stops at residual <= 1e-10.
    """
    _require_linear(problem)
    if directions_per_step < 1:
        raise ValueError("directions_per_step must be >= 1")
    return _run_engine(
        problem, config, delta=0.0, y_data=problem.y_exact,
        window=directions_per_step, two_direction=False,
    )


def solve_resesop_linear(
    problem: ForwardProblem, config: SolverConfig, delta: float, y_noisy
) -> IterationTrace:
    """Regularized subspace iteration for a linear problem with noisy data."""
    _require_linear(problem)
    y_noisy = _validate_noisy_data(problem, delta, y_noisy)
    return _run_engine(
        problem, config, delta=delta, y_data=y_noisy,
        window=config.history_depth, two_direction=False,
    )


def solve_resesop_linear_two(
    problem: ForwardProblem, config: SolverConfig, delta: float, y_noisy
) -> IterationTrace:
    """Two-direction regularized iteration for a linear problem."""
    _require_linear(problem)
    y_noisy = _validate_noisy_data(problem, delta, y_noisy)
    return _run_engine(
        problem, config, delta=delta, y_data=y_noisy,
        window=2, two_direction=True,
    )


def solve_sesop_nonlinear_exact(problem: ForwardProblem, config: SolverConfig) -> IterationTrace:
    """Exact-data stripe iteration with the recent-gradient window."""
    return _run_engine(
        problem, config, delta=0.0, y_data=problem.y_exact,
        window=config.history_depth, two_direction=False,
    )


def solve_resesop_nonlinear(
    problem: ForwardProblem, config: SolverConfig, delta: float, y_noisy
) -> IterationTrace:
    """Regularized stripe iteration over the last history_depth gradients."""
    y_noisy = _validate_noisy_data(problem, delta, y_noisy)
    return _run_engine(
        problem, config, delta=delta, y_data=y_noisy,
        window=config.history_depth, two_direction=False,
    )


def solve_resesop_nonlinear_two(
    problem: ForwardProblem, config: SolverConfig, delta: float, y_noisy
) -> IterationTrace:
    """Two-direction regularized stripe iteration (at most two projections
    per iterate, with recorded descent terms and gamma)."""
    y_noisy = _validate_noisy_data(problem, delta, y_noisy)
    return _run_engine(
        problem, config, delta=delta, y_data=y_noisy,
        window=2, two_direction=True,
    )


def solve_landweber_variant(
    problem: ForwardProblem, config: SolverConfig, delta: float, y_noisy
) -> IterationTrace:
    """Single-stripe baseline: one gradient direction per step."""
    y_noisy = _validate_noisy_data(problem, delta, y_noisy)
    return _run_engine(
        problem, config, delta=delta, y_data=y_noisy,
        window=1, two_direction=False,
    )
