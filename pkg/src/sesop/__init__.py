"""Sequential subspace optimization solvers for ill-posed operator equations.

Subpackages by layer: geometry (projections onto hyperplanes, halfspaces,
stripes), operators (forward-operator abstraction and diagnostics), corpus
(benchmark problems with known solutions), solvers (the iteration schemes),
harness (noise, sweeps, comparisons, persistence).  The command line lives
in sesop.cli and renders figures next to its CSV/JSON output.
"""

from .corpus import (
    AutoconvolutionOperator,
    DiagonalQuadraticOperator,
    ForwardProblem,
    MatrixOperator,
    corpus_names,
    get_problem,
    load_problem_json,
    make_autoconvolution,
    make_diagonal_quadratic,
    make_linear_problem,
)
from .geometry import (
    GAMMA_MIN,
    DegenerateDirectionError,
    GeometryError,
    Halfspace,
    InconsistentStripesError,
    NearParallelError,
    ProjectionContractError,
    ProjectionReport,
    RealVector,
    Stripe,
    feasibility_tol,
    gamma_factor,
    project_halfspace,
    project_hyperplane,
    project_hyperplane_intersection,
    project_hyperplane_intersection_info,
    project_stripe,
    project_stripe_intersection,
    project_stripe_intersection_info,
    project_two_halfspaces,
)
from .harness import (
    RNG_ALGORITHM,
    ComparisonReport,
    NoiseSpec,
    SweepReport,
    add_noise,
    compare_solvers,
    regularization_sweep,
    run_once,
    solver_names,
    write_json_report,
    write_trace_csv,
)
from .operators import (
    DomainBall,
    EstimationFailedError,
    ForwardOperator,
    OperatorCertificate,
    check_adjoint,
    check_frechet,
    estimate_cf,
    estimate_tcc,
    operator_norm_at,
)
from .solvers import (
    IterationContractError,
    IterationRecord,
    IterationTrace,
    SolverConfig,
    SolverError,
    StepCapExceededError,
    build_stripe_exact,
    build_stripe_noisy,
    discrepancy_bound,
    resolve_tau,
    solve_landweber_variant,
    solve_resesop_linear,
    solve_resesop_linear_two,
    solve_resesop_nonlinear,
    solve_resesop_nonlinear_two,
    solve_sesop_linear_exact,
    solve_sesop_nonlinear_exact,
)

__all__ = [
    "GAMMA_MIN",
    "RNG_ALGORITHM",
    "AutoconvolutionOperator",
    "ComparisonReport",
    "DegenerateDirectionError",
    "DiagonalQuadraticOperator",
    "DomainBall",
    "EstimationFailedError",
    "ForwardOperator",
    "ForwardProblem",
    "GeometryError",
    "Halfspace",
    "InconsistentStripesError",
    "IterationContractError",
    "IterationRecord",
    "IterationTrace",
    "MatrixOperator",
    "NearParallelError",
    "NoiseSpec",
    "OperatorCertificate",
    "ProjectionContractError",
    "ProjectionReport",
    "RealVector",
    "SolverConfig",
    "SolverError",
    "StepCapExceededError",
    "Stripe",
    "SweepReport",
    "add_noise",
    "build_stripe_exact",
    "build_stripe_noisy",
    "check_adjoint",
    "check_frechet",
    "compare_solvers",
    "corpus_names",
    "discrepancy_bound",
    "estimate_cf",
    "estimate_tcc",
    "feasibility_tol",
    "gamma_factor",
    "get_problem",
    "load_problem_json",
    "make_autoconvolution",
    "make_diagonal_quadratic",
    "make_linear_problem",
    "operator_norm_at",
    "project_halfspace",
    "project_hyperplane",
    "project_hyperplane_intersection",
    "project_hyperplane_intersection_info",
    "project_stripe",
    "project_stripe_intersection",
    "project_stripe_intersection_info",
    "project_two_halfspaces",
    "regularization_sweep",
    "resolve_tau",
    "run_once",
    "solve_landweber_variant",
    "solve_resesop_linear",
    "solve_resesop_linear_two",
    "solve_resesop_nonlinear",
    "solve_resesop_nonlinear_two",
    "solve_sesop_linear_exact",
    "solve_sesop_nonlinear_exact",
    "solver_names",
    "write_json_report",
    "write_trace_csv",
]

__version__ = "0.1.0"
