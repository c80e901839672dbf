"""Acceptance gate: ten end-to-end criteria, each printing one summary line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines.  Each
criterion is a separate test so a regression pinpoints what broke; the
noisy run grid (4 problems x 3 solvers x 4 noise levels, one fixed seed)
is computed once and shared.
"""

from __future__ import annotations

import time

import numpy as np
import pytest

import instances
import oracles
from sesop.corpus import corpus_names, get_problem
from sesop.geometry import (
    feasibility_tol,
    project_hyperplane_intersection,
    project_stripe,
    project_stripe_intersection_info,
    project_two_halfspaces,
)
from sesop.harness import NoiseSpec, add_noise, run_once
from sesop.operators import check_adjoint, check_frechet, estimate_tcc
from sesop.solvers import (
    SolverConfig,
    solve_landweber_variant,
    solve_resesop_linear_two,
    solve_resesop_nonlinear,
    solve_resesop_nonlinear_two,
)

SEED = 20260815
DELTAS = (1e-1, 1e-2, 1e-3, 1e-4)
SOLVER_NAMES = ("sesop", "resesop2", "landweber")
GRID_BUDGET_S = 300.0

# Regression values from the first full run of the seeded comparison
# (autoconvolution, delta=1e-3, seed above).
PINNED_AUTOCONV_N_STAR = {"resesop2": 19, "landweber": 19}


def report(k: int, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {k}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def noisy_grid():
    start = time.perf_counter()
    traces = {}
    for pname in corpus_names():
        problem = get_problem(pname)
        for sname in SOLVER_NAMES:
            for delta in DELTAS:
                key = (pname, sname, delta)
                traces[key] = run_once(problem, sname, SolverConfig(), NoiseSpec(delta, SEED))
    return traces, time.perf_counter() - start


def test_criterion_01_projection_oracle_equivalence():
    rng = np.random.default_rng(314159)
    start = time.perf_counter()
    worst = 0.0
    per_op = 1000

    for _ in range(per_op):
        dim = int(rng.integers(2, 21))
        x, stripe = instances.random_stripe(rng, dim)
        ineq, eq = oracles.stripe_constraints([stripe])
        ref = oracles.project_polyhedron_bruteforce(x, ineq, eq)
        worst = max(worst, float(np.max(np.abs(project_stripe(x, stripe) - ref))))

    for _ in range(per_op):
        dim = int(rng.integers(2, 21))
        x, stripes = instances.random_stripe_intersection(rng, dim, int(rng.integers(1, 4)))
        point, _ = project_stripe_intersection_info(x, stripes)
        ineq, eq = oracles.stripe_constraints(stripes)
        ref = oracles.project_polyhedron_bruteforce(x, ineq, eq)
        worst = max(worst, float(np.max(np.abs(point - ref))))

    for _ in range(per_op):
        dim = int(rng.integers(2, 21))
        x, planes = instances.random_plane_intersection(rng, dim, int(rng.integers(1, 4)))
        point = project_hyperplane_intersection(x, planes)
        ref = oracles.project_polyhedron_bruteforce(x, [], list(planes))
        worst = max(worst, float(np.max(np.abs(point - ref))))

    for _ in range(per_op):
        dim = int(rng.integers(2, 21))
        x, h1, h2 = instances.random_two_halfspaces(rng, dim)
        rep = project_two_halfspaces(x, h1, h2)
        ref = oracles.project_polyhedron_bruteforce(
            x, [oracles.halfspace_constraint(h1), oracles.halfspace_constraint(h2)]
        )
        worst = max(worst, float(np.max(np.abs(rep.point - ref))))

    elapsed = time.perf_counter() - start
    report(
        1,
        worst <= 1e-8 and elapsed < 30.0,
        f"4 operations x {per_op} instances, worst deviation {worst:.2e}, {elapsed:.1f}s",
    )


def test_criterion_02_two_halfspace_descent():
    rng = np.random.default_rng(271828)
    checked = 0
    worst = -np.inf
    for _ in range(30):
        dim = int(rng.integers(2, 13))
        x, h1, h2 = instances.random_two_halfspaces(rng, dim)
        rep = project_two_halfspaces(x, h1, h2)
        descent = sum(rep.descent_terms)
        rows = [oracles.halfspace_constraint(h1), oracles.halfspace_constraint(h2)]
        for _ in range(100):
            z = oracles.project_polyhedron_bruteforce(rng.normal(0.0, 3.0, dim), rows)
            lhs = float(np.linalg.norm(z - rep.point) ** 2)
            rhs = float(np.linalg.norm(z - x) ** 2) - descent
            worst = max(worst, lhs - rhs)
            checked += 1
    report(
        2,
        worst <= 1e-9,
        f"{checked} feasible points over 30 instances, max violation {worst:.2e}",
    )


def test_criterion_03_operator_certificates():
    start = time.perf_counter()
    details = []
    ok = True
    for name in corpus_names():
        problem = get_problem(name)
        op, ball = problem.operator, problem.ball
        defect = check_adjoint(op, ball, samples=50)
        ok = ok and defect <= 1e-10
        if not op.is_linear:
            slope = check_frechet(op, ball)
            ok = ok and abs(slope - 2.0) <= 0.1
        ok = ok and 0.0 <= problem.certificate.ctc < 1.0
        details.append(f"{name} defect {defect:.1e}")

    # sampled quotients must respect the closed-form bound 2*q*rho/(1-2*q*rho)
    diagquad = get_problem("diagquad")
    ratio = estimate_tcc(diagquad.operator, diagquad.ball, samples=2000, seed=5)
    bound = 0.25
    ok = ok and ratio <= bound + 1e-12
    elapsed = time.perf_counter() - start
    report(
        3,
        ok and elapsed < 60.0,
        f"{'; '.join(details)}; diagquad tcc ratio {ratio:.4f} <= {bound}; {elapsed:.1f}s",
    )


def test_criterion_04_stripe_containment(noisy_grid):
    traces, _ = noisy_grid
    checked = 0
    worst = -np.inf
    for (pname, _, _), trace in traces.items():
        x_plus = get_problem(pname).x_plus
        for rec in trace.records:
            if rec.stripe is None:
                continue
            s = rec.stripe
            excess = abs(float(s.u @ x_plus) - s.alpha) - s.xi
            worst = max(worst, excess - feasibility_tol(s.alpha, s.xi))
            checked += 1
    report(
        4,
        checked > 0 and worst <= 0.0,
        f"{checked} stripes across {len(traces)} runs contain x_plus "
        f"(worst margin {worst:.2e})",
    )


def test_criterion_05_monotone_error(noisy_grid):
    traces, _ = noisy_grid
    worst = -np.inf
    for trace in traces.values():
        errors = [rec.error_norm for rec in trace.records]
        for before, after in zip(errors, errors[1:]):
            worst = max(worst, after - before)
    report(
        5,
        worst <= 1e-12,
        f"{len(traces)} runs nonincreasing, worst error increase {worst:.2e}",
    )


def test_criterion_06_finite_stopping(noisy_grid):
    traces, elapsed = noisy_grid
    all_discrepancy = all(t.stop_reason == "discrepancy" for t in traces.values())
    max_n = max(t.final.n for t in traces.values())
    report(
        6,
        all_discrepancy and max_n < 10**5 and elapsed < GRID_BUDGET_S,
        f"{len(traces)}/{len(traces)} discrepancy stops, max n* = {max_n}, "
        f"grid took {elapsed:.2f}s (budget {GRID_BUDGET_S:.0f}s)",
    )


def test_criterion_07_regularization_trend(noisy_grid):
    traces, _ = noisy_grid
    ok = True
    parts = []
    for pname in ("diagquad", "autoconv-16"):
        for sname in SOLVER_NAMES:
            coarse = traces[(pname, sname, 1e-1)].final.error_norm
            fine = traces[(pname, sname, 1e-4)].final.error_norm
            ok = ok and fine < coarse
            parts.append(f"{pname}/{sname} {fine:.1e}<{coarse:.1e}")
    report(7, ok, "; ".join(parts))


def test_criterion_08_reduction_identities():
    problem = get_problem("linear-rand10")
    config = SolverConfig()
    delta = 1e-3
    y_noisy = add_noise(problem.y_exact, NoiseSpec(delta, SEED))

    linear = solve_resesop_linear_two(problem, config, delta, y_noisy)
    nonlinear = solve_resesop_nonlinear_two(problem, config, delta, y_noisy)
    dev = max(
        float(np.max(np.abs(a.x - b.x)))
        for a, b in zip(linear.records, nonlinear.records)
    )
    same_length = len(linear.records) == len(nonlinear.records)

    diagquad = get_problem("diagquad")
    y_dq = add_noise(diagquad.y_exact, NoiseSpec(delta, SEED))
    window1 = solve_resesop_nonlinear(diagquad, SolverConfig(history_depth=1), delta, y_dq)
    landweber = solve_landweber_variant(diagquad, SolverConfig(), delta, y_dq)
    n1_exact = len(window1.records) == len(landweber.records) and all(
        np.array_equal(a.x, b.x) for a, b in zip(window1.records, landweber.records)
    )
    report(
        8,
        same_length and dev <= 1e-10 and n1_exact,
        f"linear vs nonlinear two-direction deviation {dev:.2e}; "
        f"window-1 equals landweber variant exactly: {n1_exact}",
    )


def test_criterion_09_exact_data_summability():
    solvers = {
        "sesop": solve_resesop_nonlinear,
        "resesop2": solve_resesop_nonlinear_two,
        "landweber": solve_landweber_variant,
    }
    worst_ratio = 0.0
    runs = 0
    config = SolverConfig(max_iter=1500)
    for pname in corpus_names():
        problem = get_problem(pname)
        cert = problem.certificate
        cap = (cert.c_f / (1.0 - cert.ctc)) ** 2 * float(
            np.linalg.norm(problem.x_plus - problem.ball.center) ** 2
        )
        for solve in solvers.values():
            trace = solve(problem, config, 0.0, problem.y_exact)
            total = sum(rec.residual_norm**2 for rec in trace.records)
            worst_ratio = max(worst_ratio, total / cap)
            runs += 1
    report(
        9,
        worst_ratio <= 1.0 + 1e-12,
        f"{runs} exact-data runs, max residual-energy ratio {worst_ratio:.3f} of bound",
    )


def test_criterion_10_speedup_datum(noisy_grid):
    traces, _ = noisy_grid
    two = traces[("autoconv-16", "resesop2", 1e-3)].stop_index
    landweber = traces[("autoconv-16", "landweber", 1e-3)].stop_index
    pinned_ok = (
        two == PINNED_AUTOCONV_N_STAR["resesop2"]
        and landweber == PINNED_AUTOCONV_N_STAR["landweber"]
    )
    report(
        10,
        two <= landweber and pinned_ok,
        f"two-direction n* = {two}, landweber n* = {landweber} "
        f"(pinned {PINNED_AUTOCONV_N_STAR})",
    )
