"""Brute-force reference solvers used to cross-check the projection code.

The projection oracle enumerates every active set of the constraint system
and solves each candidate with a least-squares pseudoinverse, which is a
different algorithm from the production Gram/working-set route.
"""

from __future__ import annotations

import itertools

import numpy as np


def project_polyhedron_bruteforce(
    x: np.ndarray,
    ineq: list[tuple[np.ndarray, float]],
    eq: list[tuple[np.ndarray, float]] = (),
    tol: float = 1e-9,
) -> np.ndarray:
    """Projection of x onto {z : a.z <= b for ineq rows, e.z = f for eq rows}.

    Enumerates all subsets of the inequality rows as candidate active sets.
    For each subset the equality-constrained projection is computed via
    lstsq on A A^T lam = A x - b; feasible candidates are compared by
    distance and the nearest one returned.  The optimum's own active set is
    always among the subsets, so the minimum over feasible candidates is the
    exact projection.
    """
    x = np.asarray(x, dtype=float)
    m = len(ineq)
    best = None
    best_d = np.inf
    for k in range(m + 1):
        for subset in itertools.combinations(range(m), k):
            rows = [eq[i] for i in range(len(eq))] + [ineq[j] for j in subset]
            if rows:
                A = np.array([r[0] for r in rows], dtype=float)
                b = np.array([r[1] for r in rows], dtype=float)
                lam = np.linalg.lstsq(A @ A.T, A @ x - b, rcond=None)[0]
                z = x - A.T @ lam
            else:
                z = x.copy()
            ok = True
            for e, f in eq:
                if abs(float(e @ z) - f) > tol * (1.0 + abs(f)):
                    ok = False
                    break
            if ok:
                for a, b_j in ineq:
                    if float(a @ z) - b_j > tol * (1.0 + abs(b_j)):
                        ok = False
                        break
            if not ok:
                continue
            d = float(np.linalg.norm(z - x))
            if d < best_d:
                best_d = d
                best = z
    if best is None:
        raise ValueError("no feasible candidate found; constraint system may be empty")
    return best


def stripe_constraints(stripes) -> tuple[list, list]:
    """Split stripes into (ineq, eq) rows for the brute-force oracle."""
    ineq = []
    eq = []
    for s in stripes:
        if s.xi == 0.0:
            eq.append((np.asarray(s.u, dtype=float), float(s.alpha)))
        else:
            ineq.append((np.asarray(s.u, dtype=float), float(s.alpha + s.xi)))
            ineq.append((-np.asarray(s.u, dtype=float), -float(s.alpha - s.xi)))
    return ineq, eq


def halfspace_constraint(h) -> tuple[np.ndarray, float]:
    """Normalize a halfspace to one (a, b) row with a.z <= b."""
    s = 1.0 if h.sense == "<=" else -1.0
    return s * np.asarray(h.u, dtype=float), s * float(h.alpha)
