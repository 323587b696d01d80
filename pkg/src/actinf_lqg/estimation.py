"""Forward filtering of the current state (a Kalman filter on messages)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gaussian import DimensionError, Gaussian, affine_pull, affine_push, convolve, multiply
from .model import LinearGaussianModel


@dataclass(frozen=True)
class FilterState:
    """Normalized state belief at time ``t`` and the accumulated log evidence."""

    estimate: Gaussian
    log_evidence: float = 0.0
    t: int = 0


def init(prior: Gaussian, n_x: int | None = None) -> FilterState:
    if n_x is not None and prior.dim != n_x:
        raise DimensionError(f"prior has dim {prior.dim}, expected {n_x}")
    return FilterState(prior.normalized(), 0.0, 0)


def _vector(v, n, name):
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.shape != (n,):
        raise DimensionError(f"{name} must have shape ({n},), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def predict(estimate: Gaussian, u, model: LinearGaussianModel) -> Gaussian:
    """Push the belief through the transition: N(A m + B u, A V A' + W_w^-1)."""
    pushed = affine_push(estimate, model.A, model.B @ u)
    return convolve(pushed, model.V_w)


def likelihood(y, model: LinearGaussianModel) -> Gaussian:
    """N(y | C x, W_v^-1) as a function of x."""
    return affine_pull(Gaussian(y, prec=model.W_v), model.C)


def step(fs: FilterState, u_prev, y, model: LinearGaussianModel) -> FilterState:
    """Predict with ``u_prev`` and correct with observation ``y``.

    The log weight of the corrected message is log p(y_t | y_{1:t-1}), which
    is added to ``log_evidence``.
    """
    d = model.dims
    u_prev = _vector(u_prev, d.n_u, "u_prev")
    y = _vector(y, d.n_y, "y")
    predicted = predict(fs.estimate, u_prev, model)
    posterior = multiply(predicted, likelihood(y, model))
    return FilterState(
        posterior.normalized(),
        fs.log_evidence + posterior.log_weight,
        fs.t + 1,
    )
