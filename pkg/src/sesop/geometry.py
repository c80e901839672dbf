"""Projection geometry for hyperplanes, halfspaces and stripes in R^n.

The sets are parametrized by a normal direction ``u``, an offset ``alpha``
and, for stripes, a half-width ``xi >= 0``::

    hyperplane  H(u, alpha)      = {x : <u, x> = alpha}
    halfspace   H_<=(u, alpha)   = {x : <u, x> <= alpha}
    stripe      H(u, alpha, xi)  = {x : |<u, x> - alpha| <= xi}

All projections are metric (nearest-point) projections in the Euclidean
inner product.  Every operation is a pure function of its inputs and safe
to call concurrently.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

RealVector = np.ndarray

# Base feasibility tolerance; per-constraint tolerances scale with the offset
# and half-width, see feasibility_tol().
TOL_FEAS_BASE = 1e-9
# Below this floor the two-step projection's 2x2 system is too ill-conditioned.
GAMMA_MIN = 1e-8
# Relative rank tolerance for the Gram solve (times the Gram spectral norm).
GRAM_RANK_TOL = 1e-12


class GeometryError(ValueError):
    """Base class for errors raised by projection operations."""


class DegenerateDirectionError(GeometryError):
    """A normal direction has zero length."""


class NearParallelError(GeometryError):
    """Directions too close to parallel for the two-step projection."""


class ProjectionContractError(GeometryError):
    """A projection precondition does not hold for the given inputs."""


class InconsistentStripesError(GeometryError):
    """A stripe intersection appears to be empty."""


def as_vector(x) -> RealVector:
    """Coerce to a finite 1-d float64 array."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("expected a nonempty 1-d real vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    return v


def feasibility_tol(alpha: float, xi: float = 0.0, base: float = TOL_FEAS_BASE) -> float:
    """Scale-aware tolerance for membership tests: base * (1 + |alpha| + xi)."""
    return base * (1.0 + abs(alpha) + xi)


def _check_dims(x: RealVector, u: RealVector) -> None:
    if x.size != u.size:
        raise ValueError(f"dimension mismatch: {x.size} vs {u.size}")


@dataclass(frozen=True)
class Stripe:
    """The set H(u, alpha, xi) = {x : |<u, x> - alpha| <= xi}.

    xi = 0 degenerates to the hyperplane H(u, alpha).
    """

    u: RealVector
    alpha: float
    xi: float

    def __post_init__(self) -> None:
        u = as_vector(self.u)
        if float(u @ u) == 0.0:
            raise DegenerateDirectionError("stripe normal has zero length")
        alpha = float(self.alpha)
        xi = float(self.xi)
        if not np.isfinite(alpha) or not np.isfinite(xi):
            raise ValueError("stripe parameters must be finite")
        if xi < 0.0:
            raise ValueError("stripe half-width must be >= 0")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "xi", xi)

    @property
    def upper(self) -> float:
        return self.alpha + self.xi

    @property
    def lower(self) -> float:
        return self.alpha - self.xi

    def offset(self, x: RealVector) -> float:
        """Signed offset <u, x> - alpha."""
        return float(self.u @ x) - self.alpha

    def contains(self, x: RealVector, tol: float | None = None) -> bool:
        if tol is None:
            tol = feasibility_tol(self.alpha, self.xi)
        return abs(self.offset(x)) <= self.xi + tol


@dataclass(frozen=True)
class Halfspace:
    """The set {x : <u, x> <= alpha} (sense "<=") or {x : <u, x> >= alpha}."""

    u: RealVector
    alpha: float
    sense: str = "<="

    def __post_init__(self) -> None:
        u = as_vector(self.u)
        if float(u @ u) == 0.0:
            raise DegenerateDirectionError("halfspace normal has zero length")
        if self.sense not in ("<=", ">="):
            raise ValueError(f"sense must be '<=' or '>=', got {self.sense!r}")
        if not np.isfinite(float(self.alpha)):
            raise ValueError("halfspace offset must be finite")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "alpha", float(self.alpha))

    def _sign(self) -> float:
        return 1.0 if self.sense == "<=" else -1.0

    def violation(self, x: RealVector) -> float:
        """Positive iff x lies strictly outside the halfspace."""
        return self._sign() * (float(self.u @ x) - self.alpha)

    def contains(self, x: RealVector, tol: float | None = None) -> bool:
        if tol is None:
            tol = feasibility_tol(self.alpha)
        return self.violation(x) <= tol


@dataclass(frozen=True)
class ProjectionReport:
    """Result of the at-most-two-step projection onto two halfspaces.

    descent_terms holds the guaranteed summands of the descent bound
    ||z - point||^2 <= ||z - x||^2 - sum(descent_terms) for any z in the
    intersection.  gamma is present exactly when the second step ran.
    coefficients, when tracked, are the signed multipliers on the original
    halfspace normals: point = x - sum_i coefficients[i] * h_i.u.
    """

    point: RealVector
    steps_used: int
    descent_terms: tuple[float, ...]
    gamma: float | None = None
    coefficients: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.steps_used not in (1, 2):
            raise ValueError("steps_used must be 1 or 2")
        if any(t < 0.0 for t in self.descent_terms):
            raise ValueError("descent terms must be >= 0")
        if (self.gamma is None) != (self.steps_used == 1):
            raise ValueError("gamma must be present exactly for two-step results")
        if self.gamma is not None and not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if self.coefficients is not None:
            if len(self.coefficients) != self.steps_used:
                raise ValueError("need one coefficient per projection step")
            object.__setattr__(
                self, "coefficients", tuple(float(t) for t in self.coefficients)
            )
        object.__setattr__(self, "descent_terms", tuple(float(t) for t in self.descent_terms))


def gamma_factor(u1: RealVector, u2: RealVector) -> float:
    """sqrt(1 - (|<u1,u2>| / (||u1|| ||u2||))^2), in [0, 1].

    Equals 1 exactly for orthogonal directions and 0 for parallel ones;
    measures the angle between consecutive search directions.
    """
    u1 = as_vector(u1)
    u2 = as_vector(u2)
    _check_dims(u1, u2)
    n1 = float(np.linalg.norm(u1))
    n2 = float(np.linalg.norm(u2))
    if n1 == 0.0 or n2 == 0.0:
        raise DegenerateDirectionError("gamma needs two nonzero directions")
    ratio = min(1.0, abs(float(u1 @ u2)) / (n1 * n2))
    return float(np.sqrt(max(0.0, 1.0 - ratio * ratio)))


def project_hyperplane(x: RealVector, u: RealVector, alpha: float) -> RealVector:
    """Nearest point of H(u, alpha): x - ((<u,x> - alpha) / ||u||^2) u."""
    x = as_vector(x)
    u = as_vector(u)
    _check_dims(x, u)
    nu2 = float(u @ u)
    if nu2 == 0.0:
        raise DegenerateDirectionError("hyperplane normal has zero length")
    return x - ((float(u @ x) - float(alpha)) / nu2) * u


def project_halfspace(x: RealVector, h: Halfspace) -> RealVector:
    """Identity inside the halfspace, otherwise the bounding-hyperplane projection."""
    x = as_vector(x)
    _check_dims(x, h.u)
    if h.violation(x) <= 0.0:
        return x
    return project_hyperplane(x, h.u, h.alpha)


def project_stripe(x: RealVector, s: Stripe) -> RealVector:
    """Three-case rule: clamp to the violated bounding hyperplane, else identity."""
    x = as_vector(x)
    _check_dims(x, s.u)
    v = float(s.u @ x)
    if v > s.upper:
        return project_hyperplane(x, s.u, s.upper)
    if v < s.lower:
        return project_hyperplane(x, s.u, s.lower)
    return x


def _equality_projection(
    x: RealVector, U: np.ndarray, alphas: np.ndarray
) -> tuple[RealVector, np.ndarray, list[int]]:
    """Project x onto the intersection of hyperplanes <u_i, z> = alpha_i.

    Solves the Gram normal equations G t = U x - alphas and returns
    (point, coefficients, dropped) where point = x - U^T t.  Directions that
    are linearly dependent on earlier ones (at relative rank tolerance
    GRAM_RANK_TOL * ||G||_2) are dropped by ascending index and get a zero
    coefficient; the intersection is assumed consistent.
    """
    m = U.shape[0]
    G = U @ U.T
    gram_norm = float(np.linalg.norm(G, 2)) if m else 0.0
    tol = GRAM_RANK_TOL * gram_norm
    keep: list[int] = []
    dropped: list[int] = []
    basis: list[np.ndarray] = []
    for i in range(m):
        r = U[i].astype(float, copy=True)
        for _ in range(2):  # two Gram-Schmidt sweeps for stability
            for b in basis:
                r -= (r @ b) * b
        rn2 = float(r @ r)
        if rn2 <= tol:
            dropped.append(i)
        else:
            keep.append(i)
            basis.append(r / np.sqrt(rn2))
    coeffs = np.zeros(m)
    if not keep:
        return x.copy(), coeffs, dropped
    Gk = G[np.ix_(keep, keep)]
    rhs = U[keep] @ x - alphas[keep]
    try:
        L = np.linalg.cholesky(Gk)
        t = np.linalg.solve(L.T, np.linalg.solve(L, rhs))
    except np.linalg.LinAlgError:
        # borderline rank survived the drop test; fall back to least squares
        t = np.linalg.lstsq(Gk, rhs, rcond=None)[0]
    coeffs[keep] = t
    return x - U[keep].T @ t, coeffs, dropped


def project_hyperplane_intersection_info(
    x: RealVector, planes: list[tuple[RealVector, float]]
) -> tuple[RealVector, np.ndarray, list[int]]:
    """As project_hyperplane_intersection, also returning the coefficients
    t with point = x - sum_i t_i u_i and the indices of dropped planes."""
    x = as_vector(x)
    if len(planes) == 0:
        raise ValueError("need at least one hyperplane")
    us = []
    alphas = []
    for u, alpha in planes:
        u = as_vector(u)
        _check_dims(x, u)
        if float(u @ u) == 0.0:
            raise DegenerateDirectionError("hyperplane normal has zero length")
        us.append(u)
        alphas.append(float(alpha))
    point, coeffs, dropped = _equality_projection(x, np.array(us), np.array(alphas))
    if dropped:
        log.warning(
            "dropped %d dependent hyperplane direction(s), indices %s",
            len(dropped),
            dropped,
        )
    return point, coeffs, dropped


def project_hyperplane_intersection(
    x: RealVector, planes: list[tuple[RealVector, float]]
) -> RealVector:
    """Nearest point of the (assumed nonempty) intersection of hyperplanes."""
    return project_hyperplane_intersection_info(x, planes)[0]


def project_two_halfspaces(x: RealVector, h1: Halfspace, h2: Halfspace) -> ProjectionReport:
    """Project onto h1 and h2 in at most two metric projections.

    Requires x to violate h1 and satisfy h2, a nonempty intersection, and
    linearly independent normals whenever the second step is needed.  The
    first step projects onto the bounding hyperplane of h1; if the result
    leaves h2, the second step projects onto the intersection of both
    bounding hyperplanes and the KKT multiplier signs are verified.
    """
    x = as_vector(x)
    _check_dims(x, h1.u)
    _check_dims(x, h2.u)
    s1 = h1._sign()
    s2 = h2._sign()
    u1 = s1 * h1.u
    a1 = s1 * h1.alpha
    u2 = s2 * h2.u
    a2 = s2 * h2.alpha

    d1 = float(u1 @ x) - a1
    if d1 <= 0.0:
        raise ProjectionContractError("x does not violate the first halfspace")
    tol2 = feasibility_tol(h2.alpha)
    if float(u2 @ x) - a2 > tol2:
        raise ProjectionContractError("x does not satisfy the second halfspace")

    n1sq = float(u1 @ u1)
    x1 = x - (d1 / n1sq) * u1
    term1 = d1 * d1 / n1sq

    d2 = float(u2 @ x1) - a2
    if d2 <= tol2:
        return ProjectionReport(
            point=x1,
            steps_used=1,
            descent_terms=(term1,),
            coefficients=(s1 * d1 / n1sq,),
        )

    n2sq = float(u2 @ u2)
    n2 = np.sqrt(n2sq)
    c = float(u1 @ u2)
    gamma = gamma_factor(u1, u2)
    if gamma < GAMMA_MIN:
        raise NearParallelError(
            f"gamma={gamma:.3e} below floor {GAMMA_MIN:.0e}; use the single-step result"
        )

    # Multipliers of the final point as the projection of the original x.
    det = n1sq * n2sq - c * c
    r1 = float(u1 @ x) - a1
    r2 = float(u2 @ x) - a2
    t1 = (n2sq * r1 - c * r2) / det
    t2 = (n1sq * r2 - c * r1) / det
    sign_tol = 1e-12 * (1.0 + abs(t1) + abs(t2))
    if t1 < -sign_tol or t2 < -sign_tol:
        raise ProjectionContractError(
            f"KKT multipliers have wrong signs (t1={t1:.3e}, t2={t2:.3e}); "
            "the two-plane projection is not the polyhedral projection here"
        )
    point = x - t1 * u1 - t2 * u2
    term2 = (d2 / (gamma * n2)) ** 2
    return ProjectionReport(
        point=point,
        steps_used=2,
        descent_terms=(term1, term2),
        gamma=gamma,
        coefficients=(s1 * t1, s2 * t2),
    )


@dataclass(frozen=True)
class _Row:
    """One linear inequality a . z <= b, tagged with its source stripe."""

    a: RealVector
    b: float
    stripe: int
    side: int  # +1 upper bound, -1 lower bound, 0 equality (xi = 0)
    tol: float


def _stripe_rows(stripes: list[Stripe]) -> tuple[list[_Row], list[_Row]]:
    eq: list[_Row] = []
    ineq: list[_Row] = []
    for k, s in enumerate(stripes):
        tol = feasibility_tol(s.alpha, s.xi)
        if s.xi == 0.0:
            eq.append(_Row(s.u, s.alpha, k, 0, tol))
        else:
            ineq.append(_Row(s.u, s.upper, k, +1, tol))
            ineq.append(_Row(-s.u, -s.lower, k, -1, tol))
    return eq, ineq


def _project_polyhedron(
    x: RealVector, eq: list[_Row], ineq: list[_Row], seed: list[int]
) -> tuple[RealVector, list[tuple[_Row, float]]]:
    """Working-set projection onto {z : eq rows hold with equality, ineq rows hold}.

    Classic primal-dual active-set iteration: project onto the working set
    treated as equalities, drop the most negative multiplier, else add the
    most violated constraint.  When the entering normal lies in the span of
    the current working rows (more active rows than the dimension supports),
    a dual-simplex ratio test releases one working inequality row instead of
    growing the set.  Finite for these small dense problems; a pass cap
    guards against cycling on inconsistent input.
    """
    work: list[int] = list(seed)
    n_eq = len(eq)
    max_pass = 30 + 10 * (len(ineq) + n_eq)
    for _ in range(max_pass):
        rows = eq + [ineq[j] for j in work]
        if rows:
            U = np.array([r.a for r in rows])
            b = np.array([r.b for r in rows])
            z, coeffs, dropped = _equality_projection(x, U, b)
        else:
            U = np.zeros((0, x.size))
            z = x.copy()
            coeffs = np.zeros(0)
            dropped = []
        # A working row the solve had to drop as dependent is not enforced;
        # release it (re-entry goes through the pivot test below).
        dep = [i - n_eq for i in dropped if i >= n_eq]
        if dep:
            for pos in sorted(dep, reverse=True):
                del work[pos]
            continue
        # Drop the working-set constraint with the most negative multiplier.
        mult_tol = 1e-12 * (1.0 + (float(np.max(np.abs(coeffs))) if coeffs.size else 0.0))
        worst_pos = -1
        worst_mult = -mult_tol
        for pos in range(len(work)):
            m = float(coeffs[n_eq + pos])
            if m < worst_mult:
                worst_mult = m
                worst_pos = pos
        if worst_pos >= 0:
            del work[worst_pos]
            continue
        # Add the most violated constraint (scaled to distance units).
        worst_j = -1
        worst_v = 0.0
        in_work = set(work)
        for j, r in enumerate(ineq):
            if j in in_work:
                continue
            v = float(r.a @ z) - r.b
            if v > r.tol:
                vs = v / float(np.linalg.norm(r.a))
                if vs > worst_v:
                    worst_v = vs
                    worst_j = j
        if worst_j < 0:
            # Converged; verify every row, including dropped dependents.
            for r in eq:
                if abs(float(r.a @ z) - r.b) > r.tol:
                    raise InconsistentStripesError(
                        "stripe intersection appears empty (an equality row is unsatisfiable)"
                    )
            for r in ineq:
                if float(r.a @ z) - r.b > r.tol:
                    raise InconsistentStripesError(
                        "stripe intersection appears empty (an inequality row is unsatisfiable)"
                    )
            multipliers = [(rows[i], float(coeffs[i])) for i in range(len(rows))]
            return z, multipliers
        a_new = ineq[worst_j].a
        if rows:
            # Entering normal as a combination of the working rows: if it is
            # spanned by them, its constraint is violated everywhere on their
            # affine subspace, so a working inequality row with positive
            # weight must leave (ratio test; smallest index breaks ties).
            G = U @ U.T
            c = np.linalg.lstsq(G, U @ a_new, rcond=None)[0]
            residual = a_new - U.T @ c
            if float(residual @ residual) <= GRAM_RANK_TOL * float(a_new @ a_new):
                leave_pos = -1
                leave_ratio = np.inf
                c_tol = 1e-12 * (1.0 + float(np.max(np.abs(c))))
                for pos in range(len(work)):
                    weight = float(c[n_eq + pos])
                    if weight <= c_tol:
                        continue
                    ratio = float(coeffs[n_eq + pos]) / weight
                    if ratio < leave_ratio or (
                        ratio == leave_ratio and work[pos] < work[leave_pos]
                    ):
                        leave_ratio = ratio
                        leave_pos = pos
                if leave_pos < 0:
                    raise InconsistentStripesError(
                        "stripe intersection appears empty (a violated row is implied "
                        "infeasible by the equality rows)"
                    )
                del work[leave_pos]
        work.append(worst_j)
    raise InconsistentStripesError(
        "working-set projection did not settle; stripes may be inconsistent"
    )


def project_stripe_intersection_info(
    x: RealVector, stripes: list[Stripe]
) -> tuple[RealVector, np.ndarray]:
    """As project_stripe_intersection, also returning per-stripe coefficients
    t with point = x - sum_k t_k u_k (zero for inactive stripes)."""
    x = as_vector(x)
    if len(stripes) == 0:
        raise ValueError("need at least one stripe")
    for s in stripes:
        _check_dims(x, s.u)
    if len(stripes) == 1:
        s = stripes[0]
        v = float(s.u @ x)
        t = 0.0
        if v > s.upper:
            t = (v - s.upper) / float(s.u @ s.u)
        elif v < s.lower:
            t = (v - s.lower) / float(s.u @ s.u)
        return x - t * s.u, np.array([t])

    eq, ineq = _stripe_rows(stripes)
    # The first stripe is processed first: seed the working set with its
    # violated bounding row, if any.
    seed = []
    for j, r in enumerate(ineq):
        if r.stripe == 0 and float(r.a @ x) - r.b > r.tol:
            seed.append(j)
            break
    point, multipliers = _project_polyhedron(x, eq, ineq, seed)
    t = np.zeros(len(stripes))
    for row, m in multipliers:
        t[row.stripe] += m if row.side >= 0 else -m
    return point, t


def project_stripe_intersection(x: RealVector, stripes: list[Stripe]) -> RealVector:
    """Nearest point of an intersection of stripes (assumed nonempty)."""
    return project_stripe_intersection_info(x, stripes)[0]
