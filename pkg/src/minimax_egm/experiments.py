"""Scripted experiments: quartic convergence vs cycling, quadratic tightness scan,
parameter sweeps and the PPM-approximation order study."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import __version__
from .analysis import (
    DomainError,
    interaction_dominance_alpha,
    quadratic_alpha,
    quadratic_alpha_threshold,
    quadratic_theta_sigma,
    theorem_feasibility,
)
from .core import Point, SaddleProblem, check_point
from .io import ensure_writable, write_csv, write_json, write_trajectory_csv
from .problems import BoxRegion, curvature_bounds, make_quadratic, make_quartic
from .solvers import (
    InnerProxConfig,
    SolverConfig,
    Status,
    StepTooLarge,
    ppm_egm_gap,
    run_damped_egm,
    run_damped_egm_batch,
)

logger = logging.getLogger(__name__)

SWEEP_HEADER = [
    "s", "lambda", "alpha", "rho", "beta", "c_pred", "feasible",
    "start_idx", "status", "iters", "final_residual",
]
TIGHTNESS_HEADER = [
    "rho", "A", "s", "lambda", "theta", "sigma", "t2s2", "predicted", "empirical", "agree",
]

# Cycling: bounded, nonconvergent, and not slowly creeping towards the solution.
CYCLE_MAX_NORM = 10.0
CYCLE_RESIDUAL_FRACTION = 0.1

# Admissible range quoted for the quartic with A = 100; recorded, never asserted.
PUBLISHED_S_INTERVAL = (0.00245, 0.00651)
PUBLISHED_LAMBDA_INTERVAL = (0.0, 0.06)

DEFAULT_SEED = 42


def worker_count() -> int:
    raw = os.environ.get("MINIMAX_EGM_THREADS", "").strip()
    try:
        n = int(raw) if raw else 0
    except ValueError:
        n = 0
    return n if n > 0 else 1


def _map(fn, items, workers=None):
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map() preserves input order regardless of completion order.
        return list(pool.map(fn, items))


@dataclass
class SweepSpec:
    s_values: Sequence[float]
    lambda_values: Sequence[float]
    starts: Union[Sequence[Point], BoxRegion]
    budget: int = 10_000
    epsilon: float = 1e-8
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if len(self.s_values) == 0 or len(self.lambda_values) == 0:
            raise ValueError("sweep grids must be nonempty")
        if any(not s > 0 for s in self.s_values):
            raise ValueError("step sizes must be positive")
        if any(not 0 < lam <= 1 for lam in self.lambda_values):
            raise ValueError("damping values must lie in (0, 1]")
        if isinstance(self.starts, BoxRegion):
            return
        if len(self.starts) == 0:
            raise ValueError("need at least one start")

    def start_points(self, problem: SaddleProblem) -> list[Point]:
        if isinstance(self.starts, BoxRegion):
            return [Point.from_vector(v, problem.n) for v in self.starts.grid()]
        return list(self.starts)


@dataclass
class SweepRow:
    s: float
    lam: float
    alpha: float
    rho: float
    beta: float
    c_predicted: float
    feasible: bool
    start: Point
    status: Optional[Status]
    iterations: int
    final_residual: float
    start_idx: int = 0
    # Set instead of a status when certification failed and the run was skipped.
    error: Optional[str] = None

    def csv_row(self) -> list:
        status = self.status.value if self.status is not None else f"error:{self.error}"
        return [
            self.s, self.lam, self.alpha, self.rho, self.beta, self.c_predicted,
            self.feasible, self.start_idx, status, self.iterations, self.final_residual,
        ]


def write_sweep_csv(path, rows: Sequence[SweepRow]) -> None:
    write_csv(path, SWEEP_HEADER, (r.csv_row() for r in rows))


def _certify(problem, region, s, lam, bounds):
    """Return (alpha, feasibility report) or raise StepTooLarge."""
    if bounds.rho_hat > 0 and s * bounds.rho_hat >= 1:
        raise StepTooLarge(f"s = {s:.6g} >= 1/rho_hat = {1 / bounds.rho_hat:.6g}")
    alpha = interaction_dominance_alpha(problem, region, s).alpha
    return alpha, theorem_feasibility(s, lam, alpha, bounds.rho_hat, bounds.beta_hat)


def run_sweep(
    problem: SaddleProblem,
    spec: SweepSpec,
    region_for_constants: BoxRegion,
    workers: Optional[int] = None,
) -> list[SweepRow]:
    """Certify, predict and run damped EGM for every ``(s, lambda, start)``.

    Rows come out in lexicographic order of ``(s, lambda, start index)``.
    """
    bounds = curvature_bounds(problem, region_for_constants)
    starts = spec.start_points(problem)
    for z in starts:
        check_point(problem, z)
    s_values = sorted(spec.s_values)
    lam_values = sorted(spec.lambda_values)

    alphas = {}
    for s in s_values:
        try:
            alphas[s] = _certify(problem, region_for_constants, s, lam_values[0], bounds)[0]
        except StepTooLarge as exc:
            alphas[s] = exc

    jobs = []
    for s in s_values:
        for lam in lam_values:
            for idx, z0 in enumerate(starts):
                jobs.append((s, lam, idx, z0))

    run = partial(_sweep_job, problem, spec.budget, spec.epsilon, alphas, bounds)
    return _map(run, jobs, workers)


def _sweep_job(problem, budget, epsilon, alphas, bounds, job):
    s, lam, idx, z0 = job
    alpha = alphas[s]
    if isinstance(alpha, Exception):
        return SweepRow(
            s, lam, float("nan"), bounds.rho_hat, bounds.beta_hat, float("nan"), False,
            z0, None, 0, float("nan"), idx, error=type(alpha).__name__,
        )
    rep = theorem_feasibility(s, lam, alpha, bounds.rho_hat, bounds.beta_hat)
    cfg = SolverConfig(s=s, lam=lam, epsilon=epsilon, max_iter=budget)
    res = run_damped_egm(problem, z0, cfg, reference=problem.stationary_point)
    return SweepRow(
        s, lam, alpha, bounds.rho_hat, bounds.beta_hat, rep.c_predicted, rep.feasible,
        z0, res.status, res.iterations, res.final_residual, idx,
    )


# --- quartic: damped convergence vs vanilla cycling --------------------------------


@dataclass
class Fig1Row:
    variant: str
    row: SweepRow
    initial_residual: float
    max_norm: float
    late_min_residual: float
    cycling: bool
    at_stationary: bool


FIG1_SUMMARY_HEADER = ["variant"] + SWEEP_HEADER + [
    "x0", "y0", "initial_residual", "max_norm", "late_min_residual", "cycling",
]


@dataclass
class Fig1Result:
    rows: list[Fig1Row]
    feasibility: dict
    failures: list[str]
    meta: dict

    @property
    def passed(self) -> bool:
        return not self.failures

    def variant(self, name: str) -> list[Fig1Row]:
        return [r for r in self.rows if r.variant == name]


def is_cycling(status: Status, max_norm: float, late_min_residual: float, initial_residual: float) -> bool:
    return (
        status is Status.MAX_ITER
        and max_norm <= CYCLE_MAX_NORM
        and late_min_residual >= CYCLE_RESIDUAL_FRACTION * initial_residual
    )


def _fig1_job(problem, epsilon, log_every, job):
    s, lam, budget, idx, z0 = job
    cfg = SolverConfig(s=s, lam=lam, epsilon=epsilon, max_iter=budget, log_every=log_every)
    return idx, run_damped_egm(problem, z0, cfg, reference=problem.stationary_point)


def figure1_experiment(
    A_bar: float = 100.0,
    s: float = 0.005,
    lam: float = 0.01,
    start_grid: Optional[BoxRegion] = None,
    budget: int = 500_000,
    vanilla_budget: int = 10_000,
    epsilon: float = 1e-6,
    out_dir: Optional[Path] = None,
    log_every: int = 10,
    constants_grid: int = 33,
    force: bool = False,
    workers: Optional[int] = None,
    seed: int = DEFAULT_SEED,
) -> Fig1Result:
    """Run damped EGM and vanilla EGM (``lam = 1``) on the quartic from a grid of starts.

    Expected outcome: every damped run converges; every vanilla run from a
    non-stationary start is classified as cycling. The feasibility verdict
    from box-certified constants is reported next to the recorded published
    interval, without asserting that they match.
    """
    problem = make_quartic(A_bar)
    grid = start_grid or BoxRegion.cube(-4.0, 4.0, 2, 9)
    starts = [Point.from_vector(v, 1) for v in grid.grid()]

    const_region = BoxRegion(grid.lower, grid.upper, constants_grid)
    bounds = curvature_bounds(problem, const_region)
    try:
        alpha, rep = _certify(problem, const_region, s, lam, bounds)
        feas = rep.to_dict()
        feas_vanilla = theorem_feasibility(s, 1.0, alpha, bounds.rho_hat, bounds.beta_hat)
    except StepTooLarge as exc:
        alpha, feas, feas_vanilla = float("nan"), {"error": str(exc)}, None

    traj_dir = Path(out_dir) / "trajectories" if out_dir is not None else None
    if out_dir is not None:
        names = [Path(out_dir) / "fig1_summary.csv", Path(out_dir) / "meta.json"]
        names += [traj_dir / f"{v}_start{i:03d}.csv" for v in ("damped", "vanilla") for i in range(len(starts))]
        ensure_writable(names, force)

    rows: list[Fig1Row] = []
    failures: list[str] = []
    for variant, lam_v, budget_v in (("damped", lam, budget), ("vanilla", 1.0, vanilla_budget)):
        jobs = [(s, lam_v, budget_v, i, z0) for i, z0 in enumerate(starts)]
        results = _map(partial(_fig1_job, problem, epsilon, log_every), jobs, workers)
        if variant == "damped":
            c_pred, feasible = feas.get("c_predicted", float("nan")), feas.get("feasible", False)
        else:
            c_pred = feas_vanilla.c_predicted if feas_vanilla else float("nan")
            feasible = feas_vanilla.feasible if feas_vanilla else False
        for idx, res in results:
            z0 = starts[idx]
            hist = res.residual_history
            late = float(hist[len(hist) // 2 :].min())
            r0 = float(hist[0])
            at_star = r0 < epsilon
            cyc = is_cycling(res.status, res.max_norm, late, r0)
            row = SweepRow(
                s, lam_v, alpha, bounds.rho_hat, bounds.beta_hat, c_pred, feasible,
                z0, res.status, res.iterations, res.final_residual, idx,
            )
            rows.append(Fig1Row(variant, row, r0, res.max_norm, late, cyc, at_star))
            if traj_dir is not None:
                write_trajectory_csv(traj_dir / f"{variant}_start{idx:03d}.csv", res)
            label = f"{variant} start {idx} {z0.vector.tolist()}"
            if variant == "damped" and res.status is not Status.CONVERGED:
                failures.append(f"{label}: {res.status.value} (expected Converged)")
            if variant == "vanilla":
                if at_star:
                    if res.status is not Status.CONVERGED or res.iterations != 0:
                        failures.append(f"{label}: stationary start did not stop at iteration 0")
                elif not cyc:
                    failures.append(
                        f"{label}: {res.status.value}, max_norm={res.max_norm:.3g}, "
                        f"late/initial residual={late / r0:.3g} (expected cycling)"
                    )

    meta = {
        "experiment": "fig1",
        "tool_version": __version__,
        "seed": seed,
        "A_bar": A_bar,
        "s": s,
        "lambda": lam,
        "s_interpretation": "1/s = 200, i.e. s = 0.005",
        "epsilon": epsilon,
        "budget_damped": budget,
        "budget_vanilla": vanilla_budget,
        "start_grid": grid.to_dict(),
        "log_every": log_every,
        "cycling_thresholds": {
            "max_norm": CYCLE_MAX_NORM,
            "late_residual_fraction": CYCLE_RESIDUAL_FRACTION,
            "late_window": "last half of the run",
        },
        "certified_constants": bounds.to_dict(),
        "alpha": alpha,
        "feasibility_damped": feas,
        "feasibility_vanilla": feas_vanilla.to_dict() if feas_vanilla else None,
        "published_s_interval": list(PUBLISHED_S_INTERVAL),
        "published_lambda_interval": list(PUBLISHED_LAMBDA_INTERVAL),
        "published_interval_asserted": False,
        "passed": not failures,
    }
    if out_dir is not None:
        write_csv(
            Path(out_dir) / "fig1_summary.csv",
            FIG1_SUMMARY_HEADER,
            (
                [r.variant, *r.row.csv_row(), *r.row.start.vector.tolist(),
                 r.initial_residual, r.max_norm, r.late_min_residual, r.cycling]
                for r in rows
            ),
        )
        write_json(Path(out_dir) / "meta.json", meta)
    return Fig1Result(rows, feas, failures, meta)


# --- quadratic tightness scan -----------------------------------------------------


@dataclass
class TightnessRow:
    rho: float
    A_bar: float
    s: float
    lam: float
    theta: float
    sigma: float
    t2s2: float
    predicted: bool
    empirical: Status
    agree: bool
    alpha: float
    alpha_threshold: float
    in_band: bool

    def csv_row(self) -> list:
        return [
            self.rho, self.A_bar, self.s, self.lam, self.theta, self.sigma, self.t2s2,
            self.predicted, self.empirical.value, self.agree,
        ]


@dataclass
class TightnessResult:
    rows: list[TightnessRow]
    failures: list[str]
    band: float

    @property
    def passed(self) -> bool:
        return not self.failures

    def agreement_outside_band(self) -> float:
        out = [r for r in self.rows if not r.in_band]
        return sum(r.agree for r in out) / len(out) if out else 1.0


def default_tightness_grid(size: int = 20) -> tuple[np.ndarray, np.ndarray]:
    return np.geomspace(1e-4, 0.2, size), np.linspace(0.05, 1.0, size)


def tightness_scan(
    rho_values: Sequence[float] = (0.1,),
    A_bar: float = 10.0,
    s_values: Optional[Sequence[float]] = None,
    lambda_values: Optional[Sequence[float]] = None,
    budget: int = 100_000,
    epsilon: float = 1e-8,
    n: int = 1,
    band: float = 1e-3,
) -> TightnessResult:
    """Compare the closed-form criterion ``theta^2 + sigma^2 < 1`` with actual runs.

    Each cell starts from ``(1, ..., 1) / sqrt(2n)``. Cells with
    ``|theta^2 + sigma^2 - 1| <= band`` are too slow to classify within any
    fixed budget and are excluded from the agreement check.
    """
    ds, dl = default_tightness_grid()
    s_values = ds if s_values is None else np.asarray(s_values, dtype=float)
    lambda_values = dl if lambda_values is None else np.asarray(lambda_values, dtype=float)
    if np.any(lambda_values <= 0) or np.any(lambda_values > 1):
        raise ValueError("damping values must lie in (0, 1]")

    rows: list[TightnessRow] = []
    failures: list[str] = []
    for rho in rho_values:
        problem = make_quadratic(rho, A_bar, n)
        cells = [(float(s), float(lam)) for s in s_values for lam in lambda_values]
        S = np.array([c[0] for c in cells])
        Lm = np.array([c[1] for c in cells])
        z0 = np.full(2 * n, 1.0 / np.sqrt(2 * n))
        batch = run_damped_egm_batch(
            problem, np.tile(z0, (len(cells), 1)), S, Lm, epsilon=epsilon, max_iter=budget
        )
        try:
            threshold = quadratic_alpha_threshold(rho, A_bar)
        except DomainError:
            threshold = float("nan")
        for (s, lam), status in zip(cells, batch.status):
            theta, sigma = quadratic_theta_sigma(s, lam, rho, A_bar)
            t2s2 = theta**2 + sigma**2
            predicted = t2s2 < 1.0
            agree = predicted == (status is Status.CONVERGED)
            try:
                alpha = quadratic_alpha(s, rho, A_bar)
            except DomainError:
                alpha = float("nan")
            in_band = abs(t2s2 - 1.0) <= band
            row = TightnessRow(
                rho, A_bar, s, lam, theta, sigma, t2s2, predicted, status, agree,
                alpha, threshold, in_band,
            )
            rows.append(row)
            if not in_band and not agree:
                failures.append(
                    f"rho={rho} s={s:.6g} lambda={lam:.6g}: t2s2={t2s2:.6g} "
                    f"predicted={predicted} empirical={status.value}"
                )
            if predicted and np.isfinite(threshold) and np.isfinite(alpha) and alpha <= threshold:
                failures.append(
                    f"rho={rho} s={s:.6g} lambda={lam:.6g}: predicted convergence with "
                    f"alpha={alpha:.6g} <= threshold {threshold:.6g}"
                )
    return TightnessResult(rows, failures, band)


def write_tightness_csv(path, rows: Sequence[TightnessRow]) -> None:
    write_csv(path, TIGHTNESS_HEADER, (r.csv_row() for r in rows))


# --- PPM approximation order -------------------------------------------------------

GAP_FLOOR = 1e-14


def approximation_gaps(
    problem: SaddleProblem,
    z: Point,
    lam: float,
    s_values: Sequence[float],
    inner: Optional[InnerProxConfig] = None,
    method: str = "auto",
) -> np.ndarray:
    return np.array([ppm_egm_gap(problem, z, s, lam, inner, method) for s in s_values])


def approximation_order_fit(
    problem: SaddleProblem,
    z: Point,
    lam: float,
    s_values: Sequence[float],
    inner: Optional[InnerProxConfig] = None,
    method: str = "auto",
) -> float:
    """Least-squares slope of ``log gap`` against ``log s``.

    Gaps below ``1e-14`` are dropped as round-off; fewer than three usable
    points is an error.
    """
    s_arr = np.asarray(s_values, dtype=float)
    if s_arr.size < 4:
        raise ValueError("need at least 4 step sizes")
    if np.any(np.diff(s_arr) >= 0):
        raise ValueError("step sizes must be strictly decreasing")
    gaps = approximation_gaps(problem, z, lam, s_arr, inner, method)
    keep = gaps > GAP_FLOOR
    if keep.sum() < 3:
        raise ValueError(
            f"only {int(keep.sum())} gaps above {GAP_FLOOR:g}; is z a stationary point?"
        )
    slope, _ = np.polyfit(np.log(s_arr[keep]), np.log(gaps[keep]), 1)
    return float(slope)


@dataclass
class ApproxOrderStudy:
    problem: str
    z: list
    lam: float
    s_values: list
    gaps: list
    slope: float
    inner_epsilon: Optional[float] = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


APPROX_ORDER_MIN_SLOPE = 2.5


def approx_order_study(which: str = "quadratic", **overrides) -> ApproxOrderStudy:
    """The two reference study points for the damped PPM vs damped EGM gap."""
    if which == "quadratic":
        params = dict(rho=0.1, A_bar=10.0, z=(1.0, 1.0), lam=0.5, s_values=(1e-2, 5e-3, 2.5e-3, 1.25e-3))
        params.update(overrides)
        problem = make_quadratic(params["rho"], params["A_bar"], 1)
        inner, method, inner_eps = None, "exact", None
    elif which == "quartic":
        params = dict(A_bar=100.0, z=(1.0, -1.0), lam=0.01, s_values=(4e-3, 2e-3, 1e-3, 5e-4), inner_epsilon=1e-12)
        params.update(overrides)
        problem = make_quartic(params["A_bar"])
        inner_eps = params["inner_epsilon"]
        inner, method = InnerProxConfig(inner_epsilon=inner_eps), "inner"
    else:
        raise ValueError(f"unknown study problem {which!r}")
    zx, zy = params["z"]
    z = Point([zx], [zy])
    s_values = [float(v) for v in params["s_values"]]
    gaps = approximation_gaps(problem, z, params["lam"], s_values, inner, method)
    slope = approximation_order_fit(problem, z, params["lam"], s_values, inner, method)
    extra = {k: v for k, v in params.items() if k not in ("z", "lam", "s_values", "inner_epsilon")}
    return ApproxOrderStudy(which, [zx, zy], params["lam"], s_values, gaps.tolist(), slope, inner_eps, extra)


def tightness_meta(rho_values, A_bar, s_values, lambda_values, budget, epsilon, band, seed=DEFAULT_SEED) -> dict:
    return {
        "experiment": "tightness",
        "tool_version": __version__,
        "seed": seed,
        "rho_values": list(map(float, rho_values)),
        "A_bar": A_bar,
        "s_values": list(map(float, s_values)),
        "lambda_values": list(map(float, lambda_values)),
        "budget": budget,
        "epsilon": epsilon,
        "band": band,
        "start": "(1, ..., 1) / sqrt(2n)",
    }
