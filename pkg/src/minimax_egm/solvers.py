"""Damped extra-gradient, damped proximal point and gradient descent-ascent.

All runners share one loop: check the residual at ``z_k``, stop on
convergence, budget or divergence, otherwise take a step. Internally the
iterate is a flat vector ``z = [x; y]``; ``Point`` is used at the API edges.
"""

from __future__ import annotations

import enum
import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import NonFiniteError, Point, SaddleProblem, check_point, full_hessian
from .problems import BoxRegion

logger = logging.getLogger(__name__)


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITER = "MaxIterReached"
    DIVERGED = "Diverged"

    def __str__(self):
        return self.value


class StepTooLarge(ValueError):
    """Step size is outside ``(0, 1/rho)`` where the prox/interaction terms are defined."""

    def __init__(self, message, block=None, point=None):
        super().__init__(message)
        self.block = block
        self.point = point


class ProxInexact(RuntimeError):
    """The inner prox solver stopped before reaching its tolerance."""

    def __init__(self, achieved_residual: float, iterations: int, target: float):
        super().__init__(
            f"inner prox solve reached residual {achieved_residual:.3e} "
            f"after {iterations} iterations (target {target:.3e})"
        )
        self.achieved_residual = achieved_residual
        self.iterations = iterations
        self.target = target


@dataclass(frozen=True)
class SolverConfig:
    s: float
    lam: float = 1.0
    epsilon: float = 1e-8
    max_iter: int = 10_000
    divergence_radius: float = 1e8
    log_every: int = 1
    # Box the curvature constants were certified on; leaving it only logs a warning.
    region: Optional[BoxRegion] = None

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError(f"step size s must be positive, got {self.s}")
        if not 0 < self.lam <= 1:
            raise ValueError(f"damping lambda must lie in (0, 1], got {self.lam}")
        if not self.epsilon > 0:
            raise ValueError(f"tolerance epsilon must be positive, got {self.epsilon}")
        if self.max_iter < 0:
            raise ValueError("max_iter must be non-negative")
        if not self.divergence_radius > 0:
            raise ValueError("divergence_radius must be positive")
        if self.log_every < 1:
            raise ValueError("log_every must be positive")


@dataclass(frozen=True)
class InnerProxConfig:
    inner_epsilon: float = 1e-11
    inner_max_iter: int = 100_000
    # None picks 1 / (2 (1/s + ||Hessian(z)||)), a safe extra-gradient step
    # for the regularized field.
    inner_s: Optional[float] = None

    def __post_init__(self):
        if not self.inner_epsilon > 0:
            raise ValueError("inner_epsilon must be positive")
        if self.inner_max_iter < 1:
            raise ValueError("inner_max_iter must be positive")
        if self.inner_s is not None and not self.inner_s > 0:
            raise ValueError("inner_s must be positive")


@dataclass(frozen=True)
class TrajectorySample:
    iter: int
    point: Point
    residual: float
    ratio: Optional[float] = None


@dataclass
class RunResult:
    status: Status
    iterations: int
    final_point: Point
    final_residual: float
    trajectory: list[TrajectorySample] = field(default_factory=list)
    per_step_ratio: np.ndarray = field(default_factory=lambda: np.empty(0))
    residual_history: np.ndarray = field(default_factory=lambda: np.empty(0))
    max_norm: float = 0.0
    method: str = ""

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED

    @property
    def initial_residual(self) -> float:
        return float(self.residual_history[0])

    def summary(self) -> dict:
        return {
            "method": self.method,
            "status": self.status.value,
            "iterations": self.iterations,
            "final_residual": self.final_residual,
            "final_point": self.final_point.vector.tolist(),
            "max_norm": self.max_norm,
        }


# --- single steps -----------------------------------------------------------


def _as_vector(problem: SaddleProblem, z: Point) -> np.ndarray:
    check_point(problem, z)
    return z.vector


def _midpoint(problem, z, s):
    return z - s * problem.field(z)


def _egm_step(problem, z, s, lam):
    return z - lam * s * problem.field(z - s * problem.field(z))


def _gda_step(problem, z, s):
    return z - s * problem.field(z)


def egm_midpoint(problem: SaddleProblem, z: Point, s: float) -> Point:
    """Extrapolation point ``z - s F(z)``."""
    return Point.from_vector(_midpoint(problem, _as_vector(problem, z), s), problem.n)


def damped_egm_step(problem: SaddleProblem, z: Point, s: float, lam: float) -> Point:
    """``z - lam s F(z - s F(z))``; ``lam = 1`` is the classical extra-gradient step."""
    return Point.from_vector(_egm_step(problem, _as_vector(problem, z), s, lam), problem.n)


def gda_step(problem: SaddleProblem, z: Point, s: float) -> Point:
    return Point.from_vector(_gda_step(problem, _as_vector(problem, z), s), problem.n)


# --- proximal operator ------------------------------------------------------


def _check_prox_step(problem: SaddleProblem, s: float) -> None:
    if not s > 0:
        raise ValueError("prox step size must be positive")
    rho = problem.rho
    if rho is None:
        warnings.warn(
            "problem has no certified weak-convexity constant; prox subproblem may be ill-posed",
            RuntimeWarning,
            stacklevel=3,
        )
    elif rho > 0 and s * rho >= 1:
        raise StepTooLarge(f"prox needs s < 1/rho = {1 / rho:.6g}, got s = {s:.6g}")


def _inner_step(problem, z, s, inner):
    if inner.inner_s is not None:
        return inner.inner_s
    beta = np.linalg.norm(full_hessian(problem, Point.from_vector(z, problem.n)), 2)
    return 1.0 / (2.0 * (1.0 / s + beta))


def _prox_displacement(problem, z, s, inner, method="auto"):
    """Displacement ``d = prox(z) - z``.

    The inner solver runs extra-gradient on ``G(d) = F(z + d) + d / s`` and
    stops once ``||G(d)|| <= inner_epsilon``. Working with the displacement
    avoids the cancellation in ``(u - z) / s`` for small ``s``.
    """
    if method not in ("auto", "exact", "inner"):
        raise ValueError(f"unknown prox method {method!r}")
    exact = getattr(problem, "prox_exact", None)
    if method == "exact" and exact is None:
        raise ValueError(f"{problem!r} has no closed-form prox")
    if method in ("auto", "exact") and exact is not None:
        return exact(z, s) - z
    inner = inner or InnerProxConfig()
    eta = _inner_step(problem, z, s, inner)
    inv_s = 1.0 / s

    def G(d):
        return problem.field(z + d) + inv_s * d

    d = np.zeros_like(z)
    g = G(d)
    res = float(np.linalg.norm(g))
    k = 0
    while res > inner.inner_epsilon:
        if k >= inner.inner_max_iter or not np.isfinite(res):
            raise ProxInexact(res, k, inner.inner_epsilon)
        d = d - eta * G(d - eta * g)
        g = G(d)
        res = float(np.linalg.norm(g))
        k += 1
    return d


def prox(
    problem: SaddleProblem,
    z: Point,
    s: float,
    inner: Optional[InnerProxConfig] = None,
    method: str = "auto",
) -> Point:
    """Saddle prox: the min-max point of ``L(u, v) + |u - x|^2/(2s) - |v - y|^2/(2s)``.

    ``method="auto"`` uses a closed form when the problem provides one
    (``prox_exact``), otherwise the inner extra-gradient solver. Raises
    ``StepTooLarge`` if ``s >= 1/rho`` for a certified ``rho`` and
    ``ProxInexact`` if the inner solver stalls.
    """
    _check_prox_step(problem, s)
    v = _as_vector(problem, z)
    return Point.from_vector(v + _prox_displacement(problem, v, s, inner, method), problem.n)


def damped_ppm_step(
    problem: SaddleProblem,
    z: Point,
    s: float,
    lam: float,
    inner: Optional[InnerProxConfig] = None,
    method: str = "auto",
) -> Point:
    """``(1 - lam) z + lam prox(z)``."""
    _check_prox_step(problem, s)
    v = _as_vector(problem, z)
    return Point.from_vector(v + lam * _prox_displacement(problem, v, s, inner, method), problem.n)


def ppm_egm_gap(
    problem: SaddleProblem,
    z: Point,
    s: float,
    lam: float,
    inner: Optional[InnerProxConfig] = None,
    method: str = "auto",
) -> float:
    """Distance between one damped proximal point step and one damped EGM step from ``z``."""
    _check_prox_step(problem, s)
    v = _as_vector(problem, z)
    d = _prox_displacement(problem, v, s, inner, method)
    egm_move = -lam * s * problem.field(v - s * problem.field(v))
    return float(np.linalg.norm(lam * d - egm_move))


# --- run control --------------------------------------------------------------


def _run(
    problem: SaddleProblem,
    z0: Point,
    config: SolverConfig,
    step: Callable[[np.ndarray], np.ndarray],
    reference: Optional[Point],
    method: str,
) -> RunResult:
    n = problem.n
    z = _as_vector(problem, z0)
    ref = None
    if reference is not None:
        ref = _as_vector(problem, reference)
    eps, R, every = config.epsilon, config.divergence_radius, config.log_every
    region = config.region
    warned = False

    residuals = []
    ratios = []
    trajectory = []
    r = float(np.linalg.norm(problem.field(z)))
    residuals.append(r)
    max_norm = float(np.linalg.norm(z))
    dist = float(np.linalg.norm(z - ref)) if ref is not None else None
    last_ratio = None
    k = 0
    status = None
    while True:
        if k % every == 0:
            trajectory.append(TrajectorySample(k, Point.from_vector(z, n), r, last_ratio))
        if r < eps:
            status = Status.CONVERGED
            break
        if k >= config.max_iter:
            status = Status.MAX_ITER
            break
        with np.errstate(over="ignore", invalid="ignore"):
            z_new = step(z)
            norm_new = float(np.linalg.norm(z_new))
        if not np.isfinite(norm_new):
            # The last finite iterate is reported; its norm may be below the radius.
            logger.info("%s: non-finite iterate at step %d", method, k + 1)
            status = Status.DIVERGED
            break
        k += 1
        max_norm = max(max_norm, norm_new)
        if ref is not None:
            new_dist = float(np.linalg.norm(z_new - ref))
            last_ratio = new_dist / dist if dist > 0 else float("nan")
            ratios.append(last_ratio)
            dist = new_dist
        z = z_new
        if region is not None and not warned and not region.contains(z):
            logger.warning(
                "%s: iterate left the certified box at step %d; curvature constants no longer apply",
                method,
                k,
            )
            warned = True
        with np.errstate(over="ignore", invalid="ignore"):
            r = float(np.linalg.norm(problem.field(z)))
        residuals.append(r)
        if norm_new > R or not np.isfinite(r):
            status = Status.DIVERGED
            break

    if not trajectory or trajectory[-1].iter != k:
        trajectory.append(TrajectorySample(k, Point.from_vector(z, n), r, last_ratio))
    return RunResult(
        status=status,
        iterations=k,
        final_point=Point.from_vector(z, n),
        final_residual=r,
        trajectory=trajectory,
        per_step_ratio=np.asarray(ratios, dtype=float),
        residual_history=np.asarray(residuals, dtype=float),
        max_norm=max_norm,
        method=method,
    )


def run_damped_egm(
    problem: SaddleProblem,
    z0: Point,
    config: SolverConfig,
    reference: Optional[Point] = None,
) -> RunResult:
    """Iterate damped extra-gradient until ``||F(z_k)|| < epsilon``, budget or divergence.

    When ``reference`` is given (typically the known stationary point),
    ``per_step_ratio`` holds ``||z_{k+1} - ref|| / ||z_k - ref||`` for every step.
    """
    s, lam = config.s, config.lam
    return _run(problem, z0, config, lambda z: _egm_step(problem, z, s, lam), reference, "egm")


def run_gda(
    problem: SaddleProblem,
    z0: Point,
    config: SolverConfig,
    reference: Optional[Point] = None,
) -> RunResult:
    """Simultaneous gradient descent-ascent, ``z <- z - s F(z)``; damping is ignored."""
    s = config.s
    return _run(problem, z0, config, lambda z: _gda_step(problem, z, s), reference, "gda")


def run_damped_ppm(
    problem: SaddleProblem,
    z0: Point,
    config: SolverConfig,
    inner: Optional[InnerProxConfig] = None,
    reference: Optional[Point] = None,
    method: str = "auto",
) -> RunResult:
    """Iterate ``z <- (1 - lam) z + lam prox(z)``.

    Without an explicit ``inner`` config, the prox tolerance is
    ``1e-3 * config.epsilon``.
    """
    if inner is None:
        inner = InnerProxConfig(inner_epsilon=1e-3 * config.epsilon)
    elif inner.inner_epsilon > config.epsilon:
        raise ValueError("inner_epsilon must not exceed the outer epsilon")
    _check_prox_step(problem, config.s)
    s, lam = config.s, config.lam

    def step(z):
        return z + lam * _prox_displacement(problem, z, s, inner, method)

    return _run(problem, z0, config, step, reference, "ppm")


# --- batched extra-gradient ---------------------------------------------------


@dataclass
class BatchResult:
    status: list[Status]
    iterations: np.ndarray
    final_points: np.ndarray
    final_residual: np.ndarray
    initial_residual: np.ndarray
    max_norm: np.ndarray
    late_min_residual: np.ndarray


def run_damped_egm_batch(
    problem: SaddleProblem,
    starts: np.ndarray,
    s,
    lam,
    epsilon: float = 1e-8,
    max_iter: int = 10_000,
    divergence_radius: float = 1e8,
) -> BatchResult:
    """Damped extra-gradient on many independent rows at once.

    ``s`` and ``lam`` are scalars or one value per row. The run control
    matches ``run_damped_egm``. ``late_min_residual`` is the smallest residual
    seen after ``max_iter // 2`` iterations (``inf`` for rows that stopped
    earlier).
    """
    Z = np.array(starts, dtype=float, ndmin=2)
    rows = Z.shape[0]
    s = np.broadcast_to(np.asarray(s, dtype=float), (rows,))[:, None]
    lam = np.broadcast_to(np.asarray(lam, dtype=float), (rows,))[:, None]
    if np.any(s <= 0) or np.any(lam <= 0) or np.any(lam > 1):
        raise ValueError("need s > 0 and lambda in (0, 1] for every row")
    field_batch = problem.field_batch

    res = np.linalg.norm(field_batch(Z), axis=1)
    init_res = res.copy()
    max_norm = np.linalg.norm(Z, axis=1)
    late_min = np.full(rows, np.inf)
    iters = np.zeros(rows, dtype=int)
    status = np.full(rows, "", dtype=object)
    status[res < epsilon] = Status.CONVERGED
    active = np.flatnonzero(status == "")
    half = max_iter // 2
    k = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while active.size and k < max_iter:
            Za, sa, la = Z[active], s[active], lam[active]
            Zn = Za - la * sa * field_batch(Za - sa * field_batch(Za))
            norms = np.linalg.norm(Zn, axis=1)
            finite = np.isfinite(norms)
            k += 1
            ok = active[finite]
            Z[ok] = Zn[finite]
            iters[ok] = k
            max_norm[ok] = np.maximum(max_norm[ok], norms[finite])
            status[active[~finite]] = Status.DIVERGED
            r = np.linalg.norm(field_batch(Z[ok]), axis=1)
            res[ok] = r
            if k > half:
                late_min[ok] = np.minimum(late_min[ok], r)
            status[ok[(norms[finite] > divergence_radius) | ~np.isfinite(r)]] = Status.DIVERGED
            status[ok[(r < epsilon) & (status[ok] == "")]] = Status.CONVERGED
            active = active[status[active] == ""]
    status[status == ""] = Status.MAX_ITER
    return BatchResult(
        status=list(status),
        iterations=iters,
        final_points=Z,
        final_residual=res,
        initial_residual=init_res,
        max_norm=max_norm,
        late_min_residual=late_min,
    )


# Re-exported so callers can catch oracle failures from one place.
__all__ = [
    "BatchResult",
    "InnerProxConfig",
    "NonFiniteError",
    "ProxInexact",
    "RunResult",
    "SolverConfig",
    "Status",
    "StepTooLarge",
    "TrajectorySample",
    "damped_egm_step",
    "damped_ppm_step",
    "egm_midpoint",
    "gda_step",
    "ppm_egm_gap",
    "prox",
    "run_damped_egm",
    "run_damped_egm_batch",
    "run_damped_ppm",
    "run_gda",
]
