"""Linear Gaussian state-space model and quadratic goal prior."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gaussian import DimensionError, Gaussian, MatrixDims, is_pd, is_psd, symmetrize

VAGUE_PRECISION = 1e-8


def _matrix(value, name):
    M = np.atleast_2d(np.asarray(value, dtype=float))
    if M.ndim != 2:
        raise DimensionError(f"{name} must be a matrix")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    M.setflags(write=False)
    return M


def vague_prior(n_x, precision=VAGUE_PRECISION) -> Gaussian:
    return Gaussian(np.zeros(n_x), prec=precision * np.eye(n_x))


@dataclass(frozen=True, eq=False)
class LinearGaussianModel:
    """x' ~ N(A x + B u, W_w^-1), y ~ N(C x, W_v^-1), x_0 ~ prior."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    W_w: np.ndarray
    W_v: np.ndarray
    prior: Gaussian = None

    def __post_init__(self):
        for name in ("A", "B", "C", "W_w", "W_v"):
            object.__setattr__(self, name, _matrix(getattr(self, name), name))
        n_x = self.A.shape[0]
        if self.A.shape != (n_x, n_x):
            raise DimensionError(f"A must be square, got {self.A.shape}")
        if self.B.shape[0] != n_x:
            raise DimensionError(f"B must have {n_x} rows, got {self.B.shape}")
        if self.C.shape[1] != n_x:
            raise DimensionError(f"C must have {n_x} columns, got {self.C.shape}")
        n_y = self.C.shape[0]
        if self.W_w.shape != (n_x, n_x):
            raise DimensionError(f"W_w must be {n_x}x{n_x}, got {self.W_w.shape}")
        if self.W_v.shape != (n_y, n_y):
            raise DimensionError(f"W_v must be {n_y}x{n_y}, got {self.W_v.shape}")
        for name in ("W_w", "W_v"):
            M = getattr(self, name)
            if not np.allclose(M, M.T, rtol=1e-10, atol=0):
                raise ValueError(f"{name} must be symmetric")
            if not is_pd(M):
                raise ValueError(f"{name} must be positive definite")
        if self.prior is None:
            object.__setattr__(self, "prior", vague_prior(n_x))
        elif self.prior.dim != n_x:
            raise DimensionError(f"prior has dim {self.prior.dim}, expected {n_x}")

    @property
    def dims(self) -> MatrixDims:
        return MatrixDims(self.A.shape[0], self.B.shape[1], self.C.shape[0])

    @property
    def V_w(self) -> np.ndarray:
        return symmetrize(np.linalg.inv(self.W_w))

    @property
    def V_v(self) -> np.ndarray:
        return symmetrize(np.linalg.inv(self.W_v))


@dataclass(frozen=True, eq=False)
class GoalPrior:
    """Quadratic cost weights and the scale turning them into goal precisions.

    The goal prior is ``exp(-lam * sum(x'Qx/2 + u'Ru/2))``, normalized.
    """

    Q: np.ndarray
    R: np.ndarray
    lam: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "Q", _matrix(self.Q, "Q"))
        object.__setattr__(self, "R", _matrix(self.R, "R"))
        object.__setattr__(self, "lam", float(self.lam))
        if self.Q.shape[0] != self.Q.shape[1] or self.R.shape[0] != self.R.shape[1]:
            raise DimensionError("Q and R must be square")
        if not np.allclose(self.Q, self.Q.T, rtol=1e-10, atol=0) or not is_psd(self.Q):
            raise ValueError("Q must be symmetric positive semi-definite")
        if not np.allclose(self.R, self.R.T, rtol=1e-10, atol=0) or not is_pd(self.R):
            raise ValueError("R must be symmetric positive definite")
        if not self.lam > 0:
            raise ValueError("lambda must be > 0")

    def with_lambda(self, lam) -> "GoalPrior":
        return GoalPrior(self.Q, self.R, lam)

    def check(self, model: LinearGaussianModel):
        d = model.dims
        if self.Q.shape != (d.n_x, d.n_x):
            raise DimensionError(f"Q must be {d.n_x}x{d.n_x}, got {self.Q.shape}")
        if self.R.shape != (d.n_u, d.n_u):
            raise DimensionError(f"R must be {d.n_u}x{d.n_u}, got {self.R.shape}")

    def stage_cost(self, x, u) -> float:
        """Unscaled quadratic cost x'Qx/2 + u'Ru/2."""
        return 0.5 * float(x @ self.Q @ x) + 0.5 * float(u @ self.R @ u)


def benchmark_system(prior: Gaussian | None = None) -> LinearGaussianModel:
    """Two-state example system: C = W_v = W_w = I, A = [[1, .1], [0, 1]]."""
    return LinearGaussianModel(
        A=np.array([[1.0, 0.1], [0.0, 1.0]]),
        B=np.array([[0.1, 0.5], [0.05, 0.5]]),
        C=np.eye(2),
        W_w=np.eye(2),
        W_v=np.eye(2),
        prior=prior,
    )


def benchmark_goal(lam=1.0) -> GoalPrior:
    return GoalPrior(np.eye(2), np.eye(2), lam)


BENCHMARK_X0 = np.array([25.0, 25.0])
BENCHMARK_HORIZON = 10
