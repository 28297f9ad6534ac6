"""Problem abstraction, iterates and the saddle field oracle.

Everything downstream works with the saddle field

    F(z) = [grad_x L(x, y); -grad_y L(x, y)],   z = (x, y),

whose zeros are the stationary points of ``L``.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

DEFAULT_FD_STEP = 1e-5


class DimensionError(ValueError):
    """Raised when a point does not match the dimensions of a problem."""


class NonFiniteError(FloatingPointError):
    """Raised when an oracle returns NaN or Inf."""

    def __init__(self, message, coordinate=None):
        super().__init__(message)
        self.coordinate = coordinate


@dataclass(frozen=True)
class Point:
    """An iterate ``z = (x, y)`` with the minimizing and maximizing blocks kept apart."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float)).ravel()
        y = np.atleast_1d(np.asarray(self.y, dtype=float)).ravel()
        for name, block in (("x", x), ("y", y)):
            bad = np.flatnonzero(~np.isfinite(block))
            if bad.size:
                raise NonFiniteError(
                    f"non-finite entry in {name}[{bad[0]}] = {block[bad[0]]}",
                    coordinate=f"{name}[{bad[0]}]",
                )
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_vector(cls, z, n: int) -> "Point":
        z = np.asarray(z, dtype=float).ravel()
        return cls(z[:n], z[n:])

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])

    @property
    def dims(self) -> tuple[int, int]:
        return self.x.size, self.y.size

    def __eq__(self, other):
        if not isinstance(other, Point):
            return NotImplemented
        return np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y)

    def __hash__(self):
        return hash((self.x.tobytes(), self.y.tobytes()))


class SaddleProblem(ABC):
    """Oracle bundle for ``min_x max_y L(x, y)``.

    Subclasses implement the value and the partial gradients on raw arrays.
    Hessian blocks are optional; when ``has_analytic_hessian`` is false the
    helpers in this module fall back to finite differences of the gradients.
    The mixed block ``hess_yx`` is always ``hess_xy.T`` and is never stored.
    """

    n: int
    m: int
    has_analytic_hessian: bool = False
    constant_hessian: bool = False
    # Certified global weak convexity-concavity constant, when known.
    rho: Optional[float] = None
    stationary_point: Optional[Point] = None

    @property
    def dims(self) -> tuple[int, int]:
        return self.n, self.m

    @abstractmethod
    def value(self, x: np.ndarray, y: np.ndarray) -> float: ...

    @abstractmethod
    def grad_x(self, x: np.ndarray, y: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def grad_y(self, x: np.ndarray, y: np.ndarray) -> np.ndarray: ...

    def hess_xx(self, x, y) -> np.ndarray:
        raise NotImplementedError

    def hess_xy(self, x, y) -> np.ndarray:
        raise NotImplementedError

    def hess_yy(self, x, y) -> np.ndarray:
        raise NotImplementedError

    def field(self, z: np.ndarray) -> np.ndarray:
        """Saddle field on a flat vector, without validation (hot path)."""
        x, y = z[: self.n], z[self.n :]
        return np.concatenate([self.grad_x(x, y), -self.grad_y(x, y)])

    def field_batch(self, Z: np.ndarray) -> np.ndarray:
        """Saddle field applied to each row of ``Z``."""
        return np.array([self.field(z) for z in Z])

    def value_at(self, z: Point) -> float:
        return float(self.value(z.x, z.y))


class CallableProblem(SaddleProblem):
    """A problem assembled from user callables ``f(x, y)``.

    ``hessian`` is optional and, if given, must return the triple
    ``(hess_xx, hess_xy, hess_yy)``.
    """

    def __init__(
        self,
        n: int,
        m: int,
        value: Callable,
        grad_x: Callable,
        grad_y: Callable,
        hessian: Optional[Callable] = None,
        rho: Optional[float] = None,
        stationary_point: Optional[Point] = None,
    ):
        self.n, self.m = n, m
        self._value, self._gx, self._gy, self._hess = value, grad_x, grad_y, hessian
        self.has_analytic_hessian = hessian is not None
        self.rho = rho
        self.stationary_point = stationary_point

    def value(self, x, y):
        return float(self._value(x, y))

    def grad_x(self, x, y):
        return np.atleast_1d(np.asarray(self._gx(x, y), dtype=float))

    def grad_y(self, x, y):
        return np.atleast_1d(np.asarray(self._gy(x, y), dtype=float))

    def _blocks(self, x, y):
        if self._hess is None:
            raise NotImplementedError("no analytic Hessian supplied")
        xx, xy, yy = self._hess(x, y)
        return (
            np.atleast_2d(np.asarray(xx, dtype=float)),
            np.asarray(xy, dtype=float).reshape(self.n, self.m),
            np.atleast_2d(np.asarray(yy, dtype=float)),
        )

    def hess_xx(self, x, y):
        return self._blocks(x, y)[0]

    def hess_xy(self, x, y):
        return self._blocks(x, y)[1]

    def hess_yy(self, x, y):
        return self._blocks(x, y)[2]


def check_point(problem: SaddleProblem, z: Point) -> None:
    if not isinstance(z, Point):
        raise TypeError(f"expected a Point, got {type(z).__name__}")
    if z.dims != problem.dims:
        raise DimensionError(f"point has dims {z.dims}, problem expects {problem.dims}")


def _check_finite(vec: np.ndarray, n: int, what: str) -> None:
    bad = np.flatnonzero(~np.isfinite(vec))
    if bad.size:
        i = int(bad[0])
        coord = f"x[{i}]" if i < n else f"y[{i - n}]"
        raise NonFiniteError(f"non-finite {what} at {coord}: {vec[i]}", coordinate=coord)


def saddle_field(problem: SaddleProblem, z: Point) -> np.ndarray:
    """Return ``[grad_x L(z); -grad_y L(z)]`` as one flat vector."""
    check_point(problem, z)
    gx = np.asarray(problem.grad_x(z.x, z.y), dtype=float).ravel()
    gy = np.asarray(problem.grad_y(z.x, z.y), dtype=float).ravel()
    if gx.size != problem.n or gy.size != problem.m:
        raise DimensionError(f"oracle returned gradient sizes ({gx.size}, {gy.size})")
    F = np.concatenate([gx, -gy])
    _check_finite(F, problem.n, "gradient")
    return F


def residual_norm(problem: SaddleProblem, z: Point) -> float:
    """Euclidean norm of the saddle field; zero exactly at stationary points."""
    return float(np.linalg.norm(saddle_field(problem, z)))


def _fd_steps(z: np.ndarray, h: float) -> np.ndarray:
    if h <= 0:
        raise ValueError("finite difference step must be positive")
    return h * (1.0 + np.abs(z))


def finite_difference_field(problem: SaddleProblem, z: Point, h: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Central-difference estimate of the saddle field from objective values only."""
    check_point(problem, z)
    n = problem.n
    v = z.vector
    steps = _fd_steps(v, h)
    grad = np.empty_like(v)
    for i, hi in enumerate(steps):
        e = np.zeros_like(v)
        e[i] = hi
        plus, minus = v + e, v - e
        grad[i] = (problem.value(plus[:n], plus[n:]) - problem.value(minus[:n], minus[n:])) / (2 * hi)
    grad[n:] *= -1.0
    return grad


def finite_difference_hessian_blocks(problem: SaddleProblem, z: Point, h: float = DEFAULT_FD_STEP):
    """Central differences of the gradients, returned as ``(hess_xx, hess_xy, hess_yy)``.

    The diagonal blocks are symmetrized, and the mixed block is averaged with
    the transpose of its ``yx`` counterpart.
    """
    check_point(problem, z)
    n = problem.n
    v = z.vector
    steps = _fd_steps(v, h)

    def full_grad(w):
        return np.concatenate([problem.grad_x(w[:n], w[n:]), problem.grad_y(w[:n], w[n:])])

    H = np.empty((v.size, v.size))
    for j, hj in enumerate(steps):
        e = np.zeros_like(v)
        e[j] = hj
        H[:, j] = (full_grad(v + e) - full_grad(v - e)) / (2 * hj)
    xx = H[:n, :n]
    yy = H[n:, n:]
    xy = 0.5 * (H[:n, n:] + H[n:, :n].T)
    return 0.5 * (xx + xx.T), xy, 0.5 * (yy + yy.T)


def hessian_blocks(problem: SaddleProblem, z: Point):
    """Analytic Hessian blocks when available, finite differences otherwise."""
    if problem.has_analytic_hessian:
        check_point(problem, z)
        return (
            np.atleast_2d(problem.hess_xx(z.x, z.y)),
            np.asarray(problem.hess_xy(z.x, z.y), dtype=float).reshape(problem.n, problem.m),
            np.atleast_2d(problem.hess_yy(z.x, z.y)),
        )
    return finite_difference_hessian_blocks(problem, z)


def full_hessian(problem: SaddleProblem, z: Point) -> np.ndarray:
    """The ``(n+m) x (n+m)`` Hessian of ``L`` assembled from its blocks."""
    xx, xy, yy = hessian_blocks(problem, z)
    return np.block([[xx, xy], [xy.T, yy]])
