"""Benchmark problems with known exact solutions.

Three families: dense linear operators (tangential cone constant 0), a
diagonal quadratic map with an analytic tangential-cone bound, and discrete
causal autoconvolution with an empirically certified bound.  Every problem
bundles the operator, the domain ball the certificate refers to, the
certificate itself, the exact solution x_plus and the exact data y_exact.

Uniqueness of x_plus inside the domain ball is an assumption of the
regularization statements, not something the code verifies.
"""

from __future__ import annotations

import functools
import json
import logging
import math
import numbers
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import RealVector, as_vector
from .operators import (
    DomainBall,
    ForwardOperator,
    OperatorCertificate,
    TCC_SAFETY,
    check_adjoint,
    estimate_cf,
    estimate_tcc,
)

log = logging.getLogger(__name__)

_CERT_SEED = 9157


class MatrixOperator(ForwardOperator):
    """Linear operator x -> A x with the exact transpose as adjoint."""

    is_linear = True

    def __init__(self, matrix) -> None:
        a = np.asarray(matrix, dtype=float)
        if a.ndim != 2 or a.size == 0:
            raise ValueError("matrix must be 2-d and nonempty")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        super().__init__(a.shape[1], a.shape[0])
        self.matrix = a.copy()

    def apply(self, x: RealVector) -> RealVector:
        return self.matrix @ x

    def deriv_apply(self, x: RealVector, v: RealVector) -> RealVector:
        return self.matrix @ v

    def deriv_adjoint_apply(self, x: RealVector, w: RealVector) -> RealVector:
        return self.matrix.T @ w


class DiagonalQuadraticOperator(ForwardOperator):
    """Componentwise map F_i(x) = x_i + q x_i^2 with diagonal derivative."""

    def __init__(self, q: float, dim: int) -> None:
        super().__init__(dim, dim)
        if q < 0.0 or not np.isfinite(q):
            raise ValueError("q must be finite and >= 0")
        self.q = float(q)

    def apply(self, x: RealVector) -> RealVector:
        return x + self.q * x * x

    def deriv_apply(self, x: RealVector, v: RealVector) -> RealVector:
        return (1.0 + 2.0 * self.q * x) * v

    def deriv_adjoint_apply(self, x: RealVector, w: RealVector) -> RealVector:
        return (1.0 + 2.0 * self.q * x) * w


class AutoconvolutionOperator(ForwardOperator):
    """Discrete causal autoconvolution F(x)_k = h sum_{j<=k} x_{k-j} x_j, h = 1/dim.

    The derivative is the truncated convolution F'(x)v = 2 h (x * v) and its
    adjoint the matching discrete correlation (the transpose of the dense
    Jacobian 2 h x_{k-j} for j <= k).
    """

    def __init__(self, dim: int) -> None:
        super().__init__(dim, dim)
        self.h = 1.0 / dim

    def apply(self, x: RealVector) -> RealVector:
        return self.h * np.convolve(x, x)[: self.dim_y]

    def deriv_apply(self, x: RealVector, v: RealVector) -> RealVector:
        return 2.0 * self.h * np.convolve(x, v)[: self.dim_y]

    def deriv_adjoint_apply(self, x: RealVector, w: RealVector) -> RealVector:
        return 2.0 * self.h * np.correlate(w, x, mode="full")[self.dim_x - 1 :]


@dataclass(frozen=True)
class ForwardProblem:
    """Operator equation F(x) = y with a known solution and certificate.

    Invariants: x_plus lies in the half ball B_{rho/2}(x0), and y_exact is
    F(x_plus) to rounding.
    """

    operator: ForwardOperator
    ball: DomainBall
    certificate: OperatorCertificate
    x_plus: RealVector
    y_exact: RealVector
    name: str

    def __post_init__(self) -> None:
        x_plus = as_vector(self.x_plus)
        y_exact = as_vector(self.y_exact)
        if x_plus.size != self.operator.dim_x or y_exact.size != self.operator.dim_y:
            raise ValueError("solution/data dimensions do not match the operator")
        if self.ball.dim != self.operator.dim_x:
            raise ValueError("ball dimension does not match the operator")
        offset = float(np.linalg.norm(x_plus - self.ball.center))
        half = 0.5 * self.ball.radius
        if offset > half * (1.0 + 1e-12):
            raise ValueError(
                f"solution outside half-ball: ||x_plus - x0|| = {offset:.6g} "
                f"> rho/2 = {half:.6g}"
            )
        defect = float(np.linalg.norm(self.operator.apply(x_plus) - y_exact))
        if defect > 1e-12 * (1.0 + float(np.linalg.norm(y_exact))):
            raise ValueError(f"y_exact is not F(x_plus): defect {defect:.3e}")
        object.__setattr__(self, "x_plus", x_plus)
        object.__setattr__(self, "y_exact", y_exact)


def make_linear_problem(matrix_entries, x_plus, x0, rho: float, name: str = "linear") -> ForwardProblem:
    """Linear problem with exact transpose adjoint, ctc = 0 and c_f the
    largest singular value."""
    op = MatrixOperator(matrix_entries)
    x_plus = as_vector(x_plus)
    x0 = as_vector(x0)
    if x_plus.size != op.dim_x or x0.size != op.dim_x:
        raise ValueError(
            f"dimension mismatch: matrix expects {op.dim_x} unknowns, "
            f"got x_plus of size {x_plus.size} and x0 of size {x0.size}"
        )
    ball = DomainBall(x0, rho)
    c_f = float(np.linalg.norm(op.matrix, 2))
    cert = OperatorCertificate(
        ctc=0.0,
        ctc_provenance="analytic",
        c_f=c_f,
        adjoint_defect=check_adjoint(op, ball, samples=10, seed=_CERT_SEED),
        taylor_order=math.inf,
    )
    return ForwardProblem(op, ball, cert, x_plus, op.apply(x_plus), name)


def make_diagonal_quadratic(q: float, dim: int, x_plus, x0, rho: float,
                            name: str = "diagquad") -> ForwardProblem:
    """Diagonal quadratic problem with the analytic tangential-cone bound
    2 q rho / (1 - 2 q (||x0||_inf + rho)).

    The per-component remainder is F(x) - F(xt) - F'(x)(x - xt) = -q (x - xt)^2,
    which gives the bound; parameters must keep it below 1.
    """
    x_plus = as_vector(x_plus)
    x0 = as_vector(x0)
    if x_plus.size != dim or x0.size != dim:
        raise ValueError("x_plus and x0 must have length dim")
    op = DiagonalQuadraticOperator(q, dim)
    ball = DomainBall(x0, rho)
    sup = float(np.max(np.abs(x0))) + rho
    if q > 0.0:
        denom = 1.0 - 2.0 * q * sup
        if denom <= 0.0:
            raise ValueError(
                f"2*q*(||x0||_inf + rho) = {2.0 * q * sup:.6g} >= 1; "
                "the derivative may vanish on the ball"
            )
        ctc = 2.0 * q * rho / denom
        if ctc >= 1.0:
            raise ValueError(
                f"analytic tangential-cone bound {ctc:.6g} >= 1 on this ball; "
                "shrink rho or q"
            )
    else:
        ctc = 0.0
    cert = OperatorCertificate(
        ctc=ctc,
        ctc_provenance="analytic",
        c_f=1.0 + 2.0 * q * sup,
        adjoint_defect=check_adjoint(op, ball, samples=10, seed=_CERT_SEED),
        taylor_order=2.0 if q > 0.0 else math.inf,
    )
    return ForwardProblem(op, ball, cert, x_plus, op.apply(x_plus), name)


def make_autoconvolution(dim: int, x_plus, x0, rho: float, name: str = "autoconv",
                         tcc_samples: int = 10_000, seed: int = 101) -> ForwardProblem:
    """Autoconvolution problem near a strictly positive solution.

    The tangential-cone constant is certified empirically: the sampled
    maximum ratio over the ball times the 1.5 safety factor.  Balls on which
    that product reaches 1 are rejected.
    """
    x_plus = as_vector(x_plus)
    x0 = as_vector(x0)
    if x_plus.size != dim or x0.size != dim:
        raise ValueError("x_plus and x0 must have length dim")
    if float(np.min(x_plus)) <= 0.0:
        raise ValueError("x_plus must be strictly positive")
    op = AutoconvolutionOperator(dim)
    ball = DomainBall(x0, rho)
    raw = estimate_tcc(op, ball, samples=tcc_samples, seed=seed)
    ctc = TCC_SAFETY * raw
    if ctc >= 1.0:
        raise ValueError(
            f"ball too large: empirical tangential-cone estimate {raw:.4g} "
            f"times safety {TCC_SAFETY} reaches {ctc:.4g} >= 1"
        )
    cert = OperatorCertificate(
        ctc=ctc,
        ctc_provenance="empirical",
        c_f=estimate_cf(op, ball, samples=20, seed=_CERT_SEED),
        adjoint_defect=check_adjoint(op, ball, samples=25, seed=_CERT_SEED),
        taylor_order=2.0,
    )
    return ForwardProblem(op, ball, cert, x_plus, op.apply(x_plus), name)


def _linear_diag() -> ForwardProblem:
    return make_linear_problem(
        np.diag([1.0, 0.1, 0.01]),
        x_plus=np.ones(3),
        x0=np.zeros(3),
        rho=4.0,
        name="linear-diag",
    )


def _linear_rand10() -> ForwardProblem:
    rng = np.random.default_rng(12345)
    q1 = np.linalg.qr(rng.standard_normal((10, 10)))[0]
    q2 = np.linalg.qr(rng.standard_normal((10, 10)))[0]
    a = q1 @ np.diag(np.linspace(2.0, 0.5, 10)) @ q2.T
    x_plus = rng.standard_normal(10)
    x_plus /= np.linalg.norm(x_plus)
    return make_linear_problem(a, x_plus, np.zeros(10), rho=2.5, name="linear-rand10")


def _diagquad() -> ForwardProblem:
    return make_diagonal_quadratic(
        q=0.1,
        dim=4,
        x_plus=np.array([0.3, -0.2, 0.25, -0.1]),
        x0=np.zeros(4),
        rho=1.0,
        name="diagquad",
    )


def _autoconv16() -> ForwardProblem:
    k = np.arange(16)
    x_plus = 1.0 + 0.05 * np.sin(2.0 * np.pi * k / 16.0)
    return make_autoconvolution(
        16, x_plus, x0=np.ones(16), rho=0.3, name="autoconv-16"
    )


_REGISTRY = {
    "linear-diag": _linear_diag,
    "linear-rand10": _linear_rand10,
    "diagquad": _diagquad,
    "autoconv-16": _autoconv16,
}


def corpus_names() -> list[str]:
    return sorted(_REGISTRY)


@functools.lru_cache(maxsize=None)
def get_problem(name: str) -> ForwardProblem:
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise ValueError(
            f"unknown problem {name!r}; available: {', '.join(corpus_names())}"
        ) from None
    return factory()


def _require_number_list(data: dict, key: str, path: str) -> list[float]:
    if key not in data:
        raise ValueError(f"{path}: missing key '{key}'")
    value = data[key]
    if not isinstance(value, list) or not value:
        raise ValueError(f"{path}: '{key}' must be a nonempty list of numbers")
    for i, entry in enumerate(value):
        if not isinstance(entry, numbers.Real) or isinstance(entry, bool):
            raise ValueError(f"{path}: '{key}' entry {i} is not a number")
    return [float(v) for v in value]


def load_problem_json(path) -> ForwardProblem:
    """Load a linear problem from {"name", "matrix", "x_plus", "x0", "rho"}.

    Only the linear family is loadable from data; nonlinear operators need
    code.  Malformed input is rejected with a positional message.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValueError(f"{path}: cannot read problem file: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(data, dict):
        raise ValueError(f"{path}: top-level value must be an object")
    allowed = {"name", "matrix", "x_plus", "x0", "rho"}
    for key in data:
        if key not in allowed:
            raise ValueError(f"{path}: unexpected key '{key}'")
    for key in ("name", "matrix", "x_plus", "x0", "rho"):
        if key not in data:
            raise ValueError(f"{path}: missing key '{key}'")
    name = data["name"]
    if not isinstance(name, str) or not name:
        raise ValueError(f"{path}: 'name' must be a nonempty string")
    matrix = data["matrix"]
    if not isinstance(matrix, list) or not matrix:
        raise ValueError(f"{path}: 'matrix' must be a nonempty list of rows")
    width = None
    for i, row in enumerate(matrix):
        if not isinstance(row, list) or not row:
            raise ValueError(f"{path}: matrix row {i} is not a nonempty list")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ValueError(
                f"{path}: matrix row {i} has {len(row)} entries, expected {width}"
            )
        for j, entry in enumerate(row):
            if not isinstance(entry, numbers.Real) or isinstance(entry, bool):
                raise ValueError(f"{path}: matrix entry [{i}][{j}] is not a number")
    x_plus = _require_number_list(data, "x_plus", str(path))
    x0 = _require_number_list(data, "x0", str(path))
    rho = data["rho"]
    if not isinstance(rho, numbers.Real) or isinstance(rho, bool) or not rho > 0:
        raise ValueError(f"{path}: 'rho' must be a positive number")
    if len(x_plus) != width or len(x0) != width:
        raise ValueError(
            f"{path}: x_plus/x0 lengths ({len(x_plus)}, {len(x0)}) do not match "
            f"matrix width {width}"
        )
    try:
        return make_linear_problem(matrix, x_plus, x0, float(rho), name=name)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc
