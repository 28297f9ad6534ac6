"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 run-level failure (no convergence or
a failed experiment assertion), 3 certification infeasible.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    comonotonicity_check,
    interaction_dominance_alpha,
    step_size_lower_bounds,
    theorem_feasibility,
)
from .core import DimensionError, NonFiniteError, Point
from .experiments import (
    APPROX_ORDER_MIN_SLOPE,
    DEFAULT_SEED,
    PUBLISHED_LAMBDA_INTERVAL,
    PUBLISHED_S_INTERVAL,
    SweepSpec,
    approx_order_study,
    default_tightness_grid,
    figure1_experiment,
    run_sweep,
    tightness_meta,
    tightness_scan,
    write_sweep_csv,
    write_tightness_csv,
)
from .io import OutputExists, ensure_writable, write_json, write_trajectory_csv
from .problems import BoxRegion, curvature_bounds, hessian_summary, make_quadratic, make_quartic
from .solvers import (
    InnerProxConfig,
    ProxInexact,
    SolverConfig,
    Status,
    StepTooLarge,
    run_damped_egm,
    run_damped_ppm,
    run_gda,
)

EXIT_OK, EXIT_USAGE, EXIT_RUN, EXIT_INFEASIBLE = 0, 1, 2, 3

logger = logging.getLogger("minimax_egm")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _interval(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(t) for t in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}")
    if not lo < hi:
        raise argparse.ArgumentTypeError("box needs lo < hi")
    return lo, hi


def _add_problem_args(p, with_problem=True):
    if with_problem:
        p.add_argument("--problem", choices=["quadratic", "quartic"], default="quadratic")
    p.add_argument("--rho", type=float, default=0.1, help="curvature of the quadratic")
    p.add_argument("--A", type=float, default=None, help="interaction strength (10 quadratic, 100 quartic)")
    p.add_argument("--n", type=int, default=1, help="block dimension of the quadratic")


def _add_output_args(p, default_out):
    p.add_argument("--out", type=Path, default=Path(default_out))
    p.add_argument("--force", action="store_true", help="overwrite existing output files")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)


def _problem(args):
    if args.problem == "quartic":
        return make_quartic(100.0 if args.A is None else args.A)
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    return make_quadratic(args.rho, 10.0 if args.A is None else args.A, args.n)


def _default_box(args):
    return (-4.0, 4.0) if args.problem == "quartic" else (-1.0, 1.0)


def _start(problem, x0, y0):
    n, m = problem.dims
    x = np.ones(n) if x0 is None else np.asarray(x0)
    y = np.ones(m) if y0 is None else np.asarray(y0)
    if x.size == 1 and n > 1:
        x = np.full(n, x[0])
    if y.size == 1 and m > 1:
        y = np.full(m, y[0])
    z = Point(x, y)
    if z.dims != (n, m):
        raise UsageError(f"start has dims {z.dims}, problem expects {(n, m)}")
    return z


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="minimax-egm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="run one solver and write its trajectory")
    _add_problem_args(p)
    p.add_argument("--method", choices=["egm", "ppm", "gda"], default="egm")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=10_000)
    p.add_argument("--divergence-radius", type=float, default=1e8)
    p.add_argument("--log-every", type=int, default=1)
    p.add_argument("--inner-eps", type=float, default=None)
    p.add_argument("--x0", type=_floats, default=None)
    p.add_argument("--y0", type=_floats, default=None)
    _add_output_args(p, "out/solve")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("certify", help="certify interaction dominance and step-size feasibility")
    _add_problem_args(p)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=0.1)
    p.add_argument("--box", type=_interval, default=None, help="lo:hi applied to every axis")
    p.add_argument("--grid", type=int, default=33)
    p.add_argument("--pairs", type=int, default=1000)
    p.add_argument("--tolerance", type=float, default=1e-9)
    _add_output_args(p, "out/certify")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("sweep", help="certify and run damped EGM over an (s, lambda, start) grid")
    _add_problem_args(p)
    p.add_argument("--s-values", type=_floats, required=True)
    p.add_argument("--lambda-values", type=_floats, required=True)
    p.add_argument("--box", type=_interval, default=None)
    p.add_argument("--start-grid", type=int, default=3)
    p.add_argument("--constants-grid", type=int, default=33)
    p.add_argument("--budget", type=int, default=10_000)
    p.add_argument("--eps", type=float, default=1e-8)
    _add_output_args(p, "out/sweep")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fig1", help="quartic: damped EGM converges, vanilla EGM cycles")
    p.add_argument("--A", type=float, default=100.0)
    p.add_argument("--s", type=float, default=0.005)
    p.add_argument("--lambda", dest="lam", type=float, default=0.01)
    p.add_argument("--box", type=_interval, default=(-4.0, 4.0))
    p.add_argument("--grid", type=int, default=9)
    p.add_argument("--budget", type=int, default=500_000)
    p.add_argument("--vanilla-budget", type=int, default=10_000)
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--log-every", type=int, default=10)
    _add_output_args(p, "out/fig1")
    p.set_defaults(func=cmd_fig1)

    p = sub.add_parser("tightness", help="quadratic: closed-form convergence criterion vs runs")
    p.add_argument("--rho", type=_floats, default=[0.1])
    p.add_argument("--A", type=float, default=10.0)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--s-values", type=_floats, default=None)
    p.add_argument("--lambda-values", type=_floats, default=None)
    p.add_argument("--budget", type=int, default=100_000)
    p.add_argument("--eps", type=float, default=1e-8)
    p.add_argument("--band", type=float, default=1e-3)
    _add_output_args(p, "out/tightness")
    p.set_defaults(func=cmd_tightness)

    p = sub.add_parser("approx-order", help="order of the damped PPM / damped EGM gap in s")
    p.add_argument("--problem", choices=["quadratic", "quartic"], default="quadratic")
    _add_output_args(p, "out/approx-order")
    p.set_defaults(func=cmd_approx_order)
    return parser


# --- subcommands ------------------------------------------------------------------


def cmd_solve(args) -> int:
    problem = _problem(args)
    z0 = _start(problem, args.x0, args.y0)
    config = SolverConfig(
        s=args.s,
        lam=args.lam,
        epsilon=args.eps,
        max_iter=args.max_iter,
        divergence_radius=args.divergence_radius,
        log_every=args.log_every,
    )
    out = args.out
    traj, summary_path = out / "trajectory.csv", out / "summary.json"
    ensure_writable([traj, summary_path], args.force)
    ref = problem.stationary_point
    if args.method == "egm":
        result = run_damped_egm(problem, z0, config, reference=ref)
    elif args.method == "gda":
        result = run_gda(problem, z0, config, reference=ref)
    else:
        inner = None
        if args.inner_eps is not None:
            inner = InnerProxConfig(inner_epsilon=args.inner_eps)
        try:
            result = run_damped_ppm(problem, z0, config, inner=inner, reference=ref)
        except ProxInexact as exc:
            write_json(summary_path, {"status": "ProxInexact", "error": str(exc), "seed": args.seed})
            print(f"prox failed: {exc}", file=sys.stderr)
            return EXIT_RUN
    write_trajectory_csv(traj, result)
    summary = result.summary()
    summary.update(problem=repr(problem), s=args.s, lam=args.lam, epsilon=args.eps, seed=args.seed)
    write_json(summary_path, summary)
    print(f"{result.status.value} after {result.iterations} iterations, residual {result.final_residual:.3e}")
    return EXIT_OK if result.status is Status.CONVERGED else EXIT_RUN


def _region(args, problem, grid):
    lo, hi = args.box or _default_box(args)
    return BoxRegion.cube(lo, hi, problem.n + problem.m, grid)


def cmd_certify(args) -> int:
    problem = _problem(args)
    region = _region(args, problem, args.grid)
    path = args.out / "certify.json"
    ensure_writable([path], args.force)
    bounds = curvature_bounds(problem, region)
    payload = {
        "tool_version": __version__,
        "problem": repr(problem),
        "seed": args.seed,
        "s": args.s,
        "lambda": args.lam,
        "region": region.to_dict(),
        "curvature": bounds.to_dict(),
    }
    summ = hessian_summary(problem, region)
    payload["hessian_summary"] = summ.to_dict()
    bid, bbeta = step_size_lower_bounds(
        bounds.rho_hat, bounds.beta_hat, summ.hess_norm_xx_max, summ.hess_norm_yy_max, summ.lambda_min_cross
    )
    payload["step_size_lower_bounds"] = {"bound_id": bid, "bound_beta": bbeta}
    try:
        if bounds.rho_hat > 0 and args.s * bounds.rho_hat >= 1:
            raise StepTooLarge(f"s = {args.s:.6g} >= 1/rho_hat = {1 / bounds.rho_hat:.6g}")
        dom = interaction_dominance_alpha(problem, region, args.s)
    except StepTooLarge as exc:
        payload.update(error="StepTooLarge", message=str(exc), feasible=False)
        write_json(path, payload)
        print(f"infeasible: {exc}")
        return EXIT_INFEASIBLE
    feas = theorem_feasibility(args.s, args.lam, dom.alpha, bounds.rho_hat, bounds.beta_hat)
    como = comonotonicity_check(problem, args.s, args.pairs, region, args.seed, args.tolerance)
    payload["dominance"] = dom.to_dict()
    payload["feasibility"] = feas.to_dict()
    payload["comonotonicity"] = como.to_dict()
    payload["feasible"] = feas.feasible
    write_json(path, payload)
    verdict = "feasible" if feas.feasible else "infeasible"
    print(f"{verdict}: alpha={dom.alpha:.6g} c_predicted={feas.c_predicted:.6g}")
    return EXIT_OK if feas.feasible else EXIT_INFEASIBLE


def cmd_sweep(args) -> int:
    problem = _problem(args)
    constants = _region(args, problem, args.constants_grid)
    starts = BoxRegion(constants.lower, constants.upper, args.start_grid)
    spec = SweepSpec(args.s_values, args.lambda_values, starts, args.budget, args.eps, args.seed)
    csv_path, meta_path = args.out / "sweep.csv", args.out / "meta.json"
    ensure_writable([csv_path, meta_path], args.force)
    rows = run_sweep(problem, spec, constants)
    write_sweep_csv(csv_path, rows)
    write_json(
        meta_path,
        {
            "experiment": "sweep",
            "tool_version": __version__,
            "problem": repr(problem),
            "seed": args.seed,
            "s_values": sorted(args.s_values),
            "lambda_values": sorted(args.lambda_values),
            "starts": starts.to_dict(),
            "constants_region": constants.to_dict(),
            "budget": args.budget,
            "epsilon": args.eps,
        },
    )
    converged = sum(r.status is Status.CONVERGED for r in rows)
    print(f"{len(rows)} rows, {converged} converged")
    return EXIT_OK


def cmd_fig1(args) -> int:
    lo, hi = args.box
    grid = BoxRegion.cube(lo, hi, 2, args.grid)
    result = figure1_experiment(
        A_bar=args.A,
        s=args.s,
        lam=args.lam,
        start_grid=grid,
        budget=args.budget,
        vanilla_budget=args.vanilla_budget,
        epsilon=args.eps,
        out_dir=args.out,
        log_every=args.log_every,
        force=args.force,
        seed=args.seed,
    )
    damped = result.variant("damped")
    vanilla = result.variant("vanilla")
    print(
        f"damped: {sum(r.row.status is Status.CONVERGED for r in damped)}/{len(damped)} converged; "
        f"vanilla: {sum(r.cycling for r in vanilla)}/{len(vanilla)} cycling"
    )
    print(
        f"certified feasibility: {result.feasibility.get('feasible')} "
        f"(recorded interval s in {PUBLISHED_S_INTERVAL}, lambda in {PUBLISHED_LAMBDA_INTERVAL})"
    )
    for msg in result.failures:
        print(f"FAIL {msg}", file=sys.stderr)
    return EXIT_OK if result.passed else EXIT_RUN


def cmd_tightness(args) -> int:
    ds, dl = default_tightness_grid()
    s_values = ds if args.s_values is None else np.asarray(args.s_values)
    lam_values = dl if args.lambda_values is None else np.asarray(args.lambda_values)
    csv_path, meta_path = args.out / "tightness.csv", args.out / "meta.json"
    ensure_writable([csv_path, meta_path], args.force)
    result = tightness_scan(args.rho, args.A, s_values, lam_values, args.budget, args.eps, args.n, args.band)
    write_tightness_csv(csv_path, result.rows)
    meta = tightness_meta(args.rho, args.A, s_values, lam_values, args.budget, args.eps, args.band, args.seed)
    meta.update(agreement_outside_band=result.agreement_outside_band(), passed=result.passed)
    write_json(meta_path, meta)
    print(f"agreement outside band: {100 * result.agreement_outside_band():.1f}%")
    for msg in result.failures:
        print(f"FAIL {msg}", file=sys.stderr)
    return EXIT_OK if result.passed else EXIT_RUN


def cmd_approx_order(args) -> int:
    path = args.out / "approx_order.json"
    ensure_writable([path], args.force)
    study = approx_order_study(args.problem)
    payload = study.to_dict()
    payload.update(tool_version=__version__, seed=args.seed, min_slope=APPROX_ORDER_MIN_SLOPE)
    payload["passed"] = study.slope >= APPROX_ORDER_MIN_SLOPE
    write_json(path, payload)
    print(f"{args.problem}: slope {study.slope:.4f} (need >= {APPROX_ORDER_MIN_SLOPE})")
    return EXIT_OK if payload["passed"] else EXIT_RUN


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, OutputExists, DimensionError, NonFiniteError, ValueError) as exc:
        if isinstance(exc, StepTooLarge):
            print(f"infeasible: {exc}", file=sys.stderr)
            return EXIT_INFEASIBLE
        print(f"minimax-egm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
