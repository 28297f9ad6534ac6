"""Certification of interaction dominance, rate predictions and quadratic closed forms."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Point, SaddleProblem, check_point, hessian_blocks
from .problems import BoxRegion, region_points
from .solvers import InnerProxConfig, StepTooLarge, _check_prox_step, _prox_displacement


class DomainError(ValueError):
    """A closed-form expression was evaluated outside its domain."""


def _sym(M):
    return 0.5 * (M + M.T)


# --- interaction dominance ----------------------------------------------------


def interaction_matrices(problem: SaddleProblem, z: Point, s: float):
    """The two Schur-complement matrices whose smallest eigenvalues bound ``alpha(s)``.

    ``M_x = H_xx + H_xy (I/s - H_yy)^{-1} H_yx`` and
    ``M_y = -H_yy + H_yx (I/s + H_xx)^{-1} H_xy``, both symmetrized.
    """
    if not s > 0:
        raise ValueError("s must be positive")
    xx, xy, yy = hessian_blocks(problem, z)
    inv_s = 1.0 / s
    Sy = _sym(inv_s * np.eye(problem.m) - yy)
    Sx = _sym(inv_s * np.eye(problem.n) + xx)
    if np.linalg.eigvalsh(Sy)[0] <= 0:
        raise StepTooLarge(
            f"I/s - hess_yy is not positive definite at {z.vector.tolist()} (s = {s:.6g})",
            block="y",
            point=z,
        )
    if np.linalg.eigvalsh(Sx)[0] <= 0:
        raise StepTooLarge(
            f"I/s + hess_xx is not positive definite at {z.vector.tolist()} (s = {s:.6g})",
            block="x",
            point=z,
        )
    Mx = xx + xy @ np.linalg.solve(Sy, xy.T)
    My = -yy + xy.T @ np.linalg.solve(Sx, xy)
    return _sym(Mx), _sym(My)


@dataclass(frozen=True)
class DominanceReport:
    s: float
    alpha_x: float
    alpha_y: float
    alpha: float
    witness_x: Point
    witness_y: Point
    region: BoxRegion

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "alpha_x": self.alpha_x,
            "alpha_y": self.alpha_y,
            "alpha": self.alpha,
            "witness_x": self.witness_x.vector.tolist(),
            "witness_y": self.witness_y.vector.tolist(),
            "region": self.region.to_dict(),
        }


def interaction_dominance_alpha(problem: SaddleProblem, region: BoxRegion, s: float) -> DominanceReport:
    """Grid-certified ``alpha(s)``: the smallest eigenvalue of ``M_x``/``M_y`` over the box.

    Exact for constant-Hessian problems; for others it is only as good as the grid.
    """
    ax = ay = np.inf
    wx = wy = None
    for v in region_points(problem, region):
        z = Point.from_vector(v, problem.n)
        Mx, My = interaction_matrices(problem, z, s)
        ex = float(np.linalg.eigvalsh(Mx)[0])
        ey = float(np.linalg.eigvalsh(My)[0])
        if ex < ax:
            ax, wx = ex, z
        if ey < ay:
            ay, wy = ey, z
    return DominanceReport(s, ax, ay, min(ax, ay), wx, wy, region)


# --- convergence theorem --------------------------------------------------------


@dataclass(frozen=True)
class FeasibilityReport:
    s: float
    lam: float
    alpha: float
    rho: float
    beta: float
    min_term: float
    lhs_condition: float
    lambda_upper: float
    c_predicted: float
    feasible: bool

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "lambda": self.lam,
            "alpha": self.alpha,
            "rho": self.rho,
            "beta": self.beta,
            "min_term": self.min_term,
            "lhs_condition": self.lhs_condition,
            "lambda_upper": self.lambda_upper,
            "c_predicted": self.c_predicted,
            "feasible": self.feasible,
        }


def prox_min_term(s: float, rho: float) -> float:
    """``min{1, (1/(s rho) - 1)^2}``, equal to 1 at ``rho = 0`` (the second term is infinite)."""
    if s * rho <= 0.5:
        # covers rho <= 0 and avoids overflow for tiny rho
        return 1.0
    return min(1.0, (1.0 / (s * rho) - 1.0) ** 2)


def theorem_feasibility(s: float, lam: float, alpha: float, rho: float, beta: float) -> FeasibilityReport:
    """Check the step-size/damping conditions and evaluate the contraction factor

        c = 1 - 2 lam / (1/(s alpha) + 1) + lam^2 / min{1, (1/(s rho) - 1)^2} + lam s^3 beta^3.

    ``rho < 0`` (strongly convex-concave, modulus ``-rho``) is evaluated as written.
    """
    q = math.inf if alpha == 0 else 1.0 / (s * alpha) + 1.0
    min_term = prox_min_term(s, rho)
    sb3 = (s * beta) ** 3
    lhs = 2.0 / (s**3 * q) - beta**3
    lambda_upper = min_term * (2.0 / q - sb3)
    if min_term > 0:
        c = 1.0 - 2.0 * lam / q + lam**2 / min_term + lam * sb3
    else:
        c = math.inf
    step_ok = s > 0 and (rho <= 0 or s * rho < 1)
    feasible = bool(
        alpha > 0 and beta > 0 and step_ok and lhs > 0 and 0 < lam < min(lambda_upper, 1.0)
    )
    return FeasibilityReport(s, lam, alpha, rho, beta, min_term, lhs, lambda_upper, c, feasible)


def step_size_lower_bounds(
    rho: float,
    beta: float,
    hess_norm_xx_max: float,
    hess_norm_yy_max: float,
    lambda_min_cross: float,
) -> tuple[float, float]:
    """Two explicit lower bounds on ``s``.

    The first keeps interaction dominance nonnegative, the second makes the
    step-size condition of the theorem hold. A non-positive denominator gives
    ``inf`` (the bound is vacuous). For ``rho <= 0`` any positive step works
    and both bounds are 0.
    """
    if rho <= 0:
        return 0.0, 0.0
    M = max(hess_norm_xx_max, hess_norm_yy_max)
    den_id = lambda_min_cross - rho * M
    bound_id = rho / den_id if den_id > 0 else math.inf
    den_beta = rho * (2.0 * (M**2 / (rho * beta)) ** 3 - 1.0)
    bound_beta = 1.0 / den_beta if den_beta > 0 else math.inf
    return bound_id, bound_beta


# --- sampled monotonicity checks -------------------------------------------------


@dataclass(frozen=True)
class ComonotonicityReport:
    s: float
    pairs_tested: int
    min_slack: float
    passed: bool
    tolerance: float = 1e-9

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "pairs_tested": self.pairs_tested,
            "min_slack": self.min_slack,
            "passed": self.passed,
            "tolerance": self.tolerance,
        }


@dataclass(frozen=True)
class MonotonicityReport:
    s: float
    pairs_tested: int
    min_slack: float
    passed: bool
    tolerance: float = 1e-9

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "pairs_tested": self.pairs_tested,
            "min_slack": self.min_slack,
            "passed": self.passed,
            "tolerance": self.tolerance,
        }


def _sample_pairs(region: BoxRegion, num_pairs: int, seed: int):
    rng = np.random.default_rng(seed)
    return region.sample(rng, num_pairs), region.sample(rng, num_pairs)


def comonotonicity_check(
    problem: SaddleProblem,
    s: float,
    num_pairs: int = 1000,
    region: Optional[BoxRegion] = None,
    seed: int = 42,
    tolerance: float = 1e-9,
) -> ComonotonicityReport:
    """Sample ``(w - w')'(z - z') + s ||w - w'||^2`` over random pairs in the box.

    A pair passes when its slack is at least ``-tolerance (1 + ||w - w'||^2)``.
    ``min_slack`` is the raw minimum over pairs.
    """
    if region is None:
        raise ValueError("a sampling region is required")
    if region.dim != problem.n + problem.m:
        raise ValueError("region dimension does not match the problem")
    P, Q = _sample_pairs(region, num_pairs, seed)
    dw = problem.field_batch(P) - problem.field_batch(Q)
    dz = P - Q
    dw2 = np.einsum("ij,ij->i", dw, dw)
    slack = np.einsum("ij,ij->i", dw, dz) + s * dw2
    passed = bool(np.all(slack >= -tolerance * (1.0 + dw2)))
    return ComonotonicityReport(s, num_pairs, float(slack.min()), passed, tolerance)


def _envelope_field_vec(problem, v, s, inner, method="auto"):
    return -_prox_displacement(problem, v, s, inner, method) / s


def envelope_field(
    problem: SaddleProblem,
    z: Point,
    s: float,
    inner: Optional[InnerProxConfig] = None,
    method: str = "auto",
) -> np.ndarray:
    """Gradient mapping of the saddle envelope, ``(z - prox(z)) / s``."""
    _check_prox_step(problem, s)
    check_point(problem, z)
    return _envelope_field_vec(problem, z.vector, s, inner, method)


def envelope_monotonicity_check(
    problem: SaddleProblem,
    s: float,
    num_pairs: int = 1000,
    region: Optional[BoxRegion] = None,
    seed: int = 42,
    tolerance: float = 1e-9,
    inner: Optional[InnerProxConfig] = None,
) -> MonotonicityReport:
    """Sample ``(F_s(z) - F_s(z'))'(z - z')`` for the envelope gradient mapping ``F_s``."""
    if region is None:
        raise ValueError("a sampling region is required")
    _check_prox_step(problem, s)
    P, Q = _sample_pairs(region, num_pairs, seed)
    FP = np.array([_envelope_field_vec(problem, p, s, inner) for p in P])
    FQ = np.array([_envelope_field_vec(problem, q, s, inner) for q in Q])
    dw = FP - FQ
    dw2 = np.einsum("ij,ij->i", dw, dw)
    slack = np.einsum("ij,ij->i", dw, P - Q)
    passed = bool(np.all(slack >= -tolerance * (1.0 + dw2)))
    return MonotonicityReport(s, num_pairs, float(slack.min()), passed, tolerance)


def saddle_envelope_value(
    problem: SaddleProblem,
    z: Point,
    s: float,
    inner: Optional[InnerProxConfig] = None,
    method: str = "auto",
) -> float:
    """``L(u, v) + |u - x|^2/(2s) - |v - y|^2/(2s)`` at ``(u, v) = prox(z)``."""
    _check_prox_step(problem, s)
    check_point(problem, z)
    n = problem.n
    d = _prox_displacement(problem, z.vector, s, inner, method)
    u = z.vector + d
    dx, dy = d[:n], d[n:]
    return float(problem.value(u[:n], u[n:]) + (dx @ dx - dy @ dy) / (2.0 * s))


# --- quadratic closed forms ------------------------------------------------------


def quadratic_theta_sigma(s: float, lam: float, rho: float, A_bar: float) -> tuple[float, float]:
    """Entries of the exact damped-EGM update ``[[T I, -S I], [S I, T I]]`` on the quadratic."""
    theta = 1.0 + s * lam * rho + s**2 * lam * rho**2 - lam * s**2 * A_bar**2
    sigma = s * lam * A_bar * (1.0 + 2.0 * s * rho)
    return theta, sigma


def quadratic_converges(s: float, lam: float, rho: float, A_bar: float) -> bool:
    theta, sigma = quadratic_theta_sigma(s, lam, rho, A_bar)
    return theta**2 + sigma**2 < 1.0


def quadratic_alpha(s: float, rho: float, A_bar: float) -> float:
    """Largest ``alpha(s)`` for the quadratic, ``-rho + s A^2 / (1 - s rho)``."""
    if s <= 0:
        raise DomainError("s must be positive")
    if rho > 0 and s * rho >= 1:
        raise DomainError(f"need s < 1/rho = {1 / rho:.6g}")
    return -rho + s * A_bar**2 / (1.0 - s * rho)


def quadratic_alpha_threshold(rho: float, A_bar: float = 10.0) -> float:
    """Value ``alpha(s)`` must exceed for damped EGM to converge on the quadratic.

    Written for interaction ``A_bar`` as ``rho^2 (rho + 1) / (A^2 - 2 rho^2)``;
    the default ``A_bar = 10`` gives ``rho^2 (rho + 1) / (100 - 2 rho^2)``.
    """
    den = A_bar**2 - 2.0 * rho**2
    if den <= 0:
        raise DomainError(f"threshold undefined: A^2 - 2 rho^2 = {den:.6g} <= 0")
    return rho**2 * (rho + 1.0) / den
