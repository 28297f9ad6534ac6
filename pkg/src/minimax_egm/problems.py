"""Built-in test problems and box-based curvature estimation."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .core import Point, SaddleProblem, check_point, hessian_blocks

MAX_GRID_POINTS = 250_000


class QuadraticMinimax(SaddleProblem):
    """``L(x, y) = -(rho/2) x'x + A x'y + (rho/2) y'y`` with ``x, y`` in R^n.

    Positive ``rho`` makes the problem nonconvex-nonconcave; negative ``rho``
    gives a strongly-convex-strongly-concave problem with modulus ``-rho``.
    The field is linear, ``F(z) = H z``, so its unique zero is the origin
    whenever ``rho**2 + A**2 > 0``.
    """

    has_analytic_hessian = True
    constant_hessian = True

    def __init__(self, rho: float, A_bar: float, n: int = 1):
        if n < 1:
            raise ValueError("dimension n must be at least 1")
        self.A_bar = float(A_bar)
        self.n = self.m = int(n)
        self.rho = float(rho)
        self.stationary_point = Point(np.zeros(n), np.zeros(n))
        I = np.eye(n)
        self._H = np.block([[-rho * I, A_bar * I], [-A_bar * I, -rho * I]])

    def __repr__(self):
        return f"QuadraticMinimax(rho={self.rho}, A_bar={self.A_bar}, n={self.n})"

    def __reduce__(self):
        return (QuadraticMinimax, (self.rho, self.A_bar, self.n))

    def field_matrix(self) -> np.ndarray:
        """The constant matrix ``H`` with ``F(z) = H z``."""
        return self._H.copy()

    def value(self, x, y):
        r, a = self.rho, self.A_bar
        return float(-0.5 * r * x @ x + a * x @ y + 0.5 * r * y @ y)

    def grad_x(self, x, y):
        return -self.rho * x + self.A_bar * y

    def grad_y(self, x, y):
        return self.A_bar * x + self.rho * y

    def hess_xx(self, x, y):
        return -self.rho * np.eye(self.n)

    def hess_xy(self, x, y):
        return self.A_bar * np.eye(self.n)

    def hess_yy(self, x, y):
        return self.rho * np.eye(self.n)

    def field(self, z):
        return self._H @ z

    def field_batch(self, Z):
        return Z @ self._H.T

    def prox_exact(self, z: np.ndarray, s: float) -> np.ndarray:
        """Closed-form prox ``(I + s H)^{-1} z``."""
        return np.linalg.solve(np.eye(2 * self.n) + s * self._H, z)


def _f(x):
    return (x - 1) * (x + 1) * (x - 3) * (x + 3)


def _df(x):
    return 4 * x**3 - 20 * x


def _d2f(x):
    return 12 * x**2 - 20


class QuarticBilinear(SaddleProblem):
    """``L(x, y) = f(x) + A x y - f(y)`` with ``f(t) = (t-1)(t+1)(t-3)(t+3)``.

    ``f'' = 12 t^2 - 20`` is bounded below by -20, so the problem is
    20-weakly-convex-weakly-concave on the whole plane.
    """

    has_analytic_hessian = True
    n = m = 1
    rho = 20.0

    def __init__(self, A_bar: float = 100.0):
        self.A_bar = float(A_bar)
        self.stationary_point = Point([0.0], [0.0])

    def __repr__(self):
        return f"QuarticBilinear(A_bar={self.A_bar})"

    def __reduce__(self):
        return (QuarticBilinear, (self.A_bar,))

    f = staticmethod(_f)
    df = staticmethod(_df)
    d2f = staticmethod(_d2f)

    def value(self, x, y):
        x, y = float(x[0]), float(y[0])
        return _f(x) + self.A_bar * x * y - _f(y)

    def grad_x(self, x, y):
        return _df(x) + self.A_bar * y

    def grad_y(self, x, y):
        return self.A_bar * x - _df(y)

    def hess_xx(self, x, y):
        return np.array([[_d2f(x[0])]])

    def hess_xy(self, x, y):
        return np.array([[self.A_bar]])

    def hess_yy(self, x, y):
        return np.array([[-_d2f(y[0])]])

    def field(self, z):
        x, y = z[0], z[1]
        return np.array([_df(x) + self.A_bar * y, _df(y) - self.A_bar * x])

    def field_batch(self, Z):
        x, y = Z[:, 0], Z[:, 1]
        return np.stack([_df(x) + self.A_bar * y, _df(y) - self.A_bar * x], axis=1)


def make_quadratic(rho: float, A_bar: float, n: int = 1) -> QuadraticMinimax:
    return QuadraticMinimax(rho, A_bar, n)


def make_quartic(A_bar: float = 100.0) -> QuarticBilinear:
    return QuarticBilinear(A_bar)


@dataclass(frozen=True)
class BoxRegion:
    """An axis-aligned box in ``R^(n+m)`` sampled on a uniform grid."""

    lower: np.ndarray
    upper: np.ndarray
    grid_points_per_axis: int = 33

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape:
            raise ValueError("lower and upper must have the same shape")
        if not np.all(lo < hi):
            raise ValueError("box requires lower < upper componentwise")
        if self.grid_points_per_axis < 1:
            raise ValueError("grid_points_per_axis must be positive")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def cube(cls, lo: float, hi: float, dim: int, grid_points_per_axis: int = 33) -> "BoxRegion":
        return cls(np.full(dim, lo), np.full(dim, hi), grid_points_per_axis)

    @property
    def dim(self) -> int:
        return self.lower.size

    def axes(self) -> list[np.ndarray]:
        k = self.grid_points_per_axis
        if k == 1:
            return [np.array([0.5 * (a + b)]) for a, b in zip(self.lower, self.upper)]
        return [np.linspace(a, b, k) for a, b in zip(self.lower, self.upper)]

    def grid(self) -> np.ndarray:
        """All grid points as rows, in lexicographic order of the axes."""
        total = self.grid_points_per_axis**self.dim
        if total > MAX_GRID_POINTS:
            raise ValueError(
                f"grid of {total} points exceeds {MAX_GRID_POINTS}; lower grid_points_per_axis"
            )
        return np.array(list(itertools.product(*self.axes())), dtype=float).reshape(-1, self.dim)

    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, z: np.ndarray) -> bool:
        return bool(np.all(z >= self.lower) and np.all(z <= self.upper))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(size, self.dim))

    def to_dict(self) -> dict:
        return {
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "grid_points_per_axis": self.grid_points_per_axis,
        }


def check_region(problem: SaddleProblem, region: BoxRegion) -> None:
    if region.dim != problem.n + problem.m:
        raise ValueError(f"region has dim {region.dim}, problem has {problem.n + problem.m}")


def region_points(problem: SaddleProblem, region: BoxRegion) -> np.ndarray:
    """Grid points to scan; a single point suffices for constant Hessians."""
    check_region(problem, region)
    if problem.constant_hessian:
        return region.center()[None, :]
    return region.grid()


@dataclass(frozen=True)
class CurvatureBounds:
    rho_hat: float
    beta_hat: float
    rho_witness: Point
    beta_witness: Point
    region: BoxRegion = field(repr=False)

    def __iter__(self):
        # Allows ``rho_hat, beta_hat = curvature_bounds(...)``.
        return iter((self.rho_hat, self.beta_hat))

    def to_dict(self) -> dict:
        return {
            "rho_hat": self.rho_hat,
            "beta_hat": self.beta_hat,
            "rho_witness": self.rho_witness.vector.tolist(),
            "beta_witness": self.beta_witness.vector.tolist(),
        }


def curvature_bounds(problem: SaddleProblem, region: BoxRegion) -> CurvatureBounds:
    """Weak-convexity constant and smoothness constant maximized over the grid.

    ``rho_hat`` is clamped below at 0, so convex-concave problems report 0.
    """
    n = problem.n
    best_rho, best_beta = -np.inf, -np.inf
    w_rho = w_beta = None
    for v in region_points(problem, region):
        z = Point.from_vector(v, n)
        xx, xy, yy = hessian_blocks(problem, z)
        r = max(-np.linalg.eigvalsh(xx)[0], np.linalg.eigvalsh(yy)[-1])
        b = np.linalg.norm(np.block([[xx, xy], [xy.T, yy]]), 2)
        if r > best_rho:
            best_rho, w_rho = r, z
        if b > best_beta:
            best_beta, w_beta = b, z
    return CurvatureBounds(max(float(best_rho), 0.0), float(best_beta), w_rho, w_beta, region)


@dataclass(frozen=True)
class HessianSummary:
    """Region maxima/minima feeding the explicit step-size lower bounds."""

    hess_norm_xx_max: float
    hess_norm_yy_max: float
    lambda_min_cross: float

    def to_dict(self) -> dict:
        return {
            "hess_norm_xx_max": self.hess_norm_xx_max,
            "hess_norm_yy_max": self.hess_norm_yy_max,
            "lambda_min_cross": self.lambda_min_cross,
        }


def hessian_summary(problem: SaddleProblem, region: BoxRegion) -> HessianSummary:
    nxx = nyy = 0.0
    cross = np.inf
    for v in region_points(problem, region):
        xx, xy, yy = hessian_blocks(problem, Point.from_vector(v, problem.n))
        nxx = max(nxx, np.linalg.norm(xx, 2))
        nyy = max(nyy, np.linalg.norm(yy, 2))
        C = xy @ xy.T
        cross = min(cross, np.linalg.eigvalsh(0.5 * (C + C.T))[0])
    return HessianSummary(float(nxx), float(nyy), float(cross))


def point_in(problem: SaddleProblem, z: Point, region: BoxRegion) -> bool:
    check_point(problem, z)
    return region.contains(z.vector)
