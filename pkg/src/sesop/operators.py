"""Forward operators with derivative and adjoint actions, plus diagnostics.

A ForwardOperator supplies three deterministic actions: ``apply`` (the map
F itself), ``deriv_apply`` (the derivative F'(x) applied to a vector) and
``deriv_adjoint_apply`` (the adjoint F'(x)* applied to a data-space vector).
The diagnostics certify, at sampling precision, the standing assumptions the
solvers rely on: adjoint consistency, the smoothness order of the Taylor
remainder, the tangential cone constant on a domain ball, and a bound on the
derivative norm.

Weak sequential closedness is assumed rather than tested: in finite
dimensions it follows from continuity.
"""

from __future__ import annotations

import abc
import logging
import math
from dataclasses import dataclass

import numpy as np

from .geometry import RealVector, as_vector

log = logging.getLogger(__name__)

# Taylor-remainder step sizes used by check_frechet.
FRECHET_STEPS = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5)
# Denominators below this are skipped when sampling tangential-cone ratios.
TCC_DENOM_FLOOR = 1e-14
# Empirical tangential-cone estimates are inflated by this factor before use.
TCC_SAFETY = 1.5
# Power-iteration sharpening of the derivative norm bound.
CF_SAFETY = 1.01
CF_POWER_ITERS = 100


class EstimationFailedError(RuntimeError):
    """A sampling diagnostic found no usable samples."""


class ForwardOperator(abc.ABC):
    """Map F between finite-dimensional spaces, with derivative actions.

    Implementations must be deterministic, and deriv_apply(x, .) /
    deriv_adjoint_apply(x, .) must be linear in their second argument.
    """

    is_linear: bool = False

    def __init__(self, dim_x: int, dim_y: int) -> None:
        if dim_x < 1 or dim_y < 1:
            raise ValueError("operator dimensions must be >= 1")
        self.dim_x = int(dim_x)
        self.dim_y = int(dim_y)

    @abc.abstractmethod
    def apply(self, x: RealVector) -> RealVector:
        """F(x)."""

    @abc.abstractmethod
    def deriv_apply(self, x: RealVector, v: RealVector) -> RealVector:
        """F'(x) v."""

    @abc.abstractmethod
    def deriv_adjoint_apply(self, x: RealVector, w: RealVector) -> RealVector:
        """F'(x)* w."""


@dataclass(frozen=True)
class DomainBall:
    """Closed ball B_rho(x0) on which the operator assumptions are certified."""

    center: RealVector
    radius: float

    def __post_init__(self) -> None:
        center = as_vector(self.center)
        radius = float(self.radius)
        if not (radius > 0.0 and np.isfinite(radius)):
            raise ValueError("ball radius must be positive and finite")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", radius)

    @property
    def dim(self) -> int:
        return self.center.size

    def contains(self, x: RealVector, tol: float = 0.0) -> bool:
        return float(np.linalg.norm(x - self.center)) <= self.radius + tol

    def sample(self, rng: np.random.Generator) -> RealVector:
        """Uniform draw: Gaussian direction times a radius^(1/dim)-corrected
        radial component."""
        d = self.dim
        g = rng.standard_normal(d)
        n = float(np.linalg.norm(g))
        while n == 0.0:  # pragma: no cover - probability zero
            g = rng.standard_normal(d)
            n = float(np.linalg.norm(g))
        r = self.radius * float(rng.uniform()) ** (1.0 / d)
        return self.center + (r / n) * g


@dataclass(frozen=True)
class OperatorCertificate:
    """Certified constants for one operator on one domain ball.

    ctc bounds the tangential-cone ratio on the ball (analytic bound or
    empirical sample maximum times the safety factor); c_f bounds the
    derivative norm; adjoint_defect and taylor_order record the measured
    diagnostics (taylor_order is inf for operators with exact linearization).
    """

    ctc: float
    ctc_provenance: str
    c_f: float
    adjoint_defect: float
    taylor_order: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.ctc < 1.0:
            raise ValueError(f"ctc must lie in [0, 1), got {self.ctc}")
        if self.ctc_provenance not in ("analytic", "empirical"):
            raise ValueError("ctc_provenance must be 'analytic' or 'empirical'")
        if not self.c_f > 0.0:
            raise ValueError("c_f must be positive")

    def to_dict(self) -> dict:
        return {
            "ctc": self.ctc,
            "ctc_provenance": self.ctc_provenance,
            "c_f": self.c_f,
            "adjoint_defect": self.adjoint_defect,
            "taylor_order": "exact" if math.isinf(self.taylor_order) else self.taylor_order,
        }


def check_adjoint(op: ForwardOperator, ball: DomainBall, samples: int = 50, seed: int = 0) -> float:
    """Max relative defect |<F'(x)v, w> - <v, F'(x)*w>| over sampled (x, v, w).

    The defect is normalized by ||v|| ||w|| scale with scale = 1 + ||F'(x)v|| / ||v||,
    so the result is dimensionless and comparable across operators.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        x = ball.sample(rng)
        v = rng.standard_normal(op.dim_x)
        w = rng.standard_normal(op.dim_y)
        av = op.deriv_apply(x, v)
        atw = op.deriv_adjoint_apply(x, w)
        nv = float(np.linalg.norm(v))
        nw = float(np.linalg.norm(w))
        scale = 1.0 + float(np.linalg.norm(av)) / nv
        defect = abs(float(av @ w) - float(v @ atw)) / (nv * nw * scale)
        worst = max(worst, defect)
    return worst


def check_frechet(op: ForwardOperator, ball: DomainBall, samples: int = 20, seed: int = 0) -> float:
    """Empirical Taylor-remainder order from log-log fits over FRECHET_STEPS.

    Fits log ||F(x + h v) - F(x) - h F'(x) v|| against log h for each sample
    and returns the median slope; about 2 for smooth operators.  Remainders
    at rounding level are excluded; if none survive anywhere the remainder
    is exact and inf is returned.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    hs = np.asarray(FRECHET_STEPS)
    slopes = []
    for _ in range(samples):
        # Shrink toward the center so x + h v stays inside the ball.
        x = ball.center + 0.8 * (ball.sample(rng) - ball.center)
        v = rng.standard_normal(op.dim_x)
        v *= min(1.0, 0.2 * ball.radius) / float(np.linalg.norm(v))
        f0 = op.apply(x)
        dv = op.deriv_apply(x, v)
        floor = 1e-13 * (1.0 + float(np.linalg.norm(f0)))
        rems = np.array([float(np.linalg.norm(op.apply(x + h * v) - f0 - h * dv)) for h in hs])
        mask = rems > floor
        if np.count_nonzero(mask) >= 2:
            slope = np.polyfit(np.log10(hs[mask]), np.log10(rems[mask]), 1)[0]
            slopes.append(float(slope))
    if not slopes:
        return math.inf
    return float(np.median(slopes))


def estimate_tcc(op: ForwardOperator, ball: DomainBall, samples: int = 2000, seed: int = 0) -> float:
    """Max sampled ratio ||F(x) - F(xt) - F'(x)(x - xt)|| / ||F(x) - F(xt)||
    over pairs drawn uniformly from the ball; near-degenerate denominators
    (below TCC_DENOM_FLOOR) are skipped."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    used = 0
    for _ in range(samples):
        x = ball.sample(rng)
        xt = ball.sample(rng)
        fx = op.apply(x)
        fxt = op.apply(xt)
        den = float(np.linalg.norm(fx - fxt))
        if den <= TCC_DENOM_FLOOR:
            continue
        num = float(np.linalg.norm(fx - fxt - op.deriv_apply(x, x - xt)))
        worst = max(worst, num / den)
        used += 1
    if used == 0:
        raise EstimationFailedError("all sampled pairs had degenerate denominators")
    return worst


def operator_norm_at(op: ForwardOperator, x: RealVector, iters: int = CF_POWER_ITERS,
                     rng: np.random.Generator | None = None) -> float:
    """||F'(x)|| via power iteration on F'(x)* F'(x) with a Rayleigh quotient."""
    if rng is None:
        rng = np.random.default_rng(0)
    v = rng.standard_normal(op.dim_x)
    v /= float(np.linalg.norm(v))
    for _ in range(iters):
        w = op.deriv_adjoint_apply(x, op.deriv_apply(x, v))
        n = float(np.linalg.norm(w))
        if n == 0.0:
            return 0.0
        v = w / n
    return float(np.linalg.norm(op.deriv_apply(x, v)))


def estimate_cf(op: ForwardOperator, ball: DomainBall, samples: int = 20, seed: int = 0) -> float:
    """Max derivative norm over sampled ball points, times the 1.01 safety factor."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        x = ball.sample(rng)
        worst = max(worst, operator_norm_at(op, x, rng=rng))
    return CF_SAFETY * worst
