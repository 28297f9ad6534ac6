"""Damped extra-gradient and proximal point solvers for nonconvex-nonconcave minimax
problems, with certification of interaction dominance and rate predictions."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    CallableProblem,
    DimensionError,
    NonFiniteError,
    Point,
    SaddleProblem,
    finite_difference_field,
    finite_difference_hessian_blocks,
    hessian_blocks,
    residual_norm,
    saddle_field,
)
from .problems import (  # noqa: E402
    BoxRegion,
    QuadraticMinimax,
    QuarticBilinear,
    curvature_bounds,
    make_quadratic,
    make_quartic,
)
from .solvers import (  # noqa: E402
    InnerProxConfig,
    ProxInexact,
    RunResult,
    SolverConfig,
    Status,
    StepTooLarge,
    damped_egm_step,
    damped_ppm_step,
    egm_midpoint,
    ppm_egm_gap,
    prox,
    run_damped_egm,
    run_damped_ppm,
    run_gda,
)
from .analysis import (  # noqa: E402
    DomainError,
    comonotonicity_check,
    envelope_field,
    envelope_monotonicity_check,
    interaction_dominance_alpha,
    interaction_matrices,
    quadratic_alpha,
    quadratic_alpha_threshold,
    quadratic_converges,
    quadratic_theta_sigma,
    saddle_envelope_value,
    step_size_lower_bounds,
    theorem_feasibility,
)
