"""Closed-form gain schedules for the active-inference and LQG regulators.

Both regulators run a backward Riccati-type recursion on precisions ``P_k``
starting from ``P_{t+T} = lam Q`` and act through ``u_t = -K_t x_hat_t``.
The active-inference recursion replaces ``lam R`` by the augmented weight
``R' = ((lam R)^-1 + (B' W_w B)^-1)^-1`` and its gain additionally depends
on the process noise and on the precision of the current state estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gaussian import Gaussian, SingularGaussianError, is_pd, is_psd, searle_combine, symmetrize
from .model import GoalPrior, LinearGaussianModel

# B is treated as invertible (closed form valid) below this condition number
B_COND_MAX = 1e10


@dataclass(frozen=True, eq=False)
class GainSchedule:
    """Backward precisions ``P[0] = P_{t+1}, ..., P[-1] = P_{t+T} = lam Q``."""

    P: tuple
    R_prime: np.ndarray | None
    horizon: int

    @property
    def P_next(self) -> np.ndarray:
        return self.P[0]


def augmented_control_weight(model: LinearGaussianModel, goal: GoalPrior):
    """R' = ((lam R)^-1 + (B' W_w B)^-1)^-1, via Searle's identity."""
    return searle_combine(goal.lam * goal.R, model.B.T @ model.W_w @ model.B)


def _closed_form_valid(B) -> bool:
    # the R' form relies on B B^-1 = I
    return B.shape[0] == B.shape[1] and np.linalg.cond(B) < B_COND_MAX


def _riccati_step(P, A, B, R_eff, lamQ):
    BtP = B.T @ P
    M = R_eff + BtP @ B
    try:
        correction = A.T @ BtP.T @ np.linalg.solve(M, BtP @ A)
    except np.linalg.LinAlgError as exc:
        raise SingularGaussianError("R' + B'PB is singular") from exc
    return symmetrize(A.T @ P @ A - correction + lamQ)


def _message_form_step(P, model, goal):
    # A'(P^-1 + B(lam R)^-1 B' + W_w^-1)^-1 A + lam Q without inverting P
    N = model.B @ np.linalg.solve(goal.lam * goal.R, model.B.T) + model.V_w
    S = np.linalg.solve(np.eye(P.shape[0]) + P @ N, P)
    return symmetrize(model.A.T @ S @ model.A + goal.lam * goal.Q)


def actinf_backward_step(P_k, model: LinearGaussianModel, goal: GoalPrior):
    """One step of the active-inference precision recursion, P_k -> P_{k-1}.

    Uses the closed form with ``R'`` when B is square and invertible. Otherwise
    (B = 0, rank deficient or non-square) that form is not valid and the
    equivalent un-simplified expression
    ``A'(P_k^-1 + B (lam R)^-1 B' + W_w^-1)^-1 A + lam Q`` is used instead.
    """
    P_k = symmetrize(P_k)
    if not is_psd(P_k):
        raise ValueError("P_k must be symmetric PSD")
    if _closed_form_valid(model.B):
        R_prime = augmented_control_weight(model, goal)
        return _riccati_step(P_k, model.A, model.B, R_prime, goal.lam * goal.Q)
    return _message_form_step(P_k, model, goal)


def _schedule(step, goal, T, R_prime):
    if int(T) != T or T < 1:
        raise ValueError(f"horizon must be a positive integer, got {T!r}")
    P = symmetrize(goal.lam * goal.Q)
    Ps = [P]
    for _ in range(int(T) - 1):
        P = step(P)
        Ps.append(P)
    for P in Ps:
        P.setflags(write=False)
    return GainSchedule(tuple(reversed(Ps)), R_prime, int(T))


def actinf_schedule(model: LinearGaussianModel, goal: GoalPrior, T: int) -> GainSchedule:
    goal.check(model)
    R_prime = augmented_control_weight(model, goal) if _closed_form_valid(model.B) else None
    return _schedule(lambda P: actinf_backward_step(P, model, goal), goal, T, R_prime)


def lqg_schedule(model: LinearGaussianModel, cost: GoalPrior, T: int) -> GainSchedule:
    """Finite-horizon Riccati recursion with terminal weight lam Q."""
    cost.check(model)
    lamR = cost.lam * cost.R
    lamQ = cost.lam * cost.Q
    return _schedule(lambda P: _riccati_step(P, model.A, model.B, lamR, lamQ), cost, T, lamR)


def goal_conditioned_covariance(estimate: Gaussian, goal: GoalPrior):
    """V'_t = (W_hat_t + lam Q)^-1."""
    try:
        return symmetrize(np.linalg.inv(estimate.prec + goal.lam * goal.Q))
    except np.linalg.LinAlgError as exc:
        raise SingularGaussianError("W_hat + lam Q is singular") from exc


def actinf_gain(schedule: GainSchedule, estimate: Gaussian, model: LinearGaussianModel, goal: GoalPrior):
    """Active-inference feedback gain K_t and action u_t = -K_t x_hat_t.

    ``estimate`` is the normalized filtered belief N_W(x_hat_t, W_hat_t).
    """
    A, B = model.A, model.B
    W_hat = estimate.prec
    V_prime = goal_conditioned_covariance(estimate, goal)
    M = A @ V_prime @ A.T + model.V_w
    P = schedule.P_next
    if is_pd(P):
        S = np.linalg.inv(np.linalg.inv(P) + M)
    else:
        # (P^-1 + M)^-1 = (I + P M)^-1 P
        S = np.linalg.solve(np.eye(P.shape[0]) + P @ M, P)
    S = symmetrize(S)
    outer = B.T @ S @ B + goal.lam * goal.R
    assert is_pd(outer), "B'SB + lam R must be PD for lam > 0 and R > 0"
    K = np.linalg.solve(outer, B.T @ S @ A @ V_prime @ W_hat)
    return K, -K @ estimate.mean


def lqg_gain(schedule: GainSchedule, x_hat, model: LinearGaussianModel, cost: GoalPrior):
    """K_t = (B'P_{t+1}B + lam R)^-1 B'P_{t+1}A and u_t = -K_t x_hat."""
    P = schedule.P_next
    B = model.B
    K = np.linalg.solve(B.T @ P @ B + cost.lam * cost.R, B.T @ P @ model.A)
    return K, -K @ np.asarray(x_hat, dtype=float)


def gain_gap(K1, K2) -> float:
    """Induced infinity norm (max absolute row sum) of K1 - K2."""
    return float(np.abs(np.asarray(K1) - np.asarray(K2)).sum(axis=1).max())


def limit_check_lambda(model, Q, R, T, lambdas, estimate_precision=None):
    """Gap ||K_actinf(lam) - K_lqg||_inf for a decreasing sequence of lam.

    The LQG gain does not depend on lam. ``estimate_precision`` is W_hat_t
    (identity by default).
    """
    lambdas = [float(v) for v in lambdas]
    if any(v <= 0 for v in lambdas) or any(b >= a for a, b in zip(lambdas, lambdas[1:])):
        raise ValueError("lambdas must be positive and strictly decreasing")
    n_x = model.A.shape[0]
    W_hat = np.eye(n_x) if estimate_precision is None else estimate_precision
    estimate = Gaussian(np.zeros(n_x), prec=W_hat)
    cost = GoalPrior(Q, R, 1.0)
    K_lqg, _ = lqg_gain(lqg_schedule(model, cost, T), np.zeros(n_x), model, cost)
    gaps = []
    for lam in lambdas:
        goal = GoalPrior(Q, R, lam)
        K, _ = actinf_gain(actinf_schedule(model, goal, T), estimate, model, goal)
        gaps.append(gain_gap(K, K_lqg))
    return np.array(gaps)


def limit_check_deterministic(model, goal: GoalPrior, T, eps=1e8):
    """Gain gap when W_w and W_hat_t are both eps * I (near-deterministic limit)."""
    n_x = model.A.shape[0]
    det_model = LinearGaussianModel(model.A, model.B, model.C, eps * np.eye(n_x), model.W_v, model.prior)
    estimate = Gaussian(np.zeros(n_x), prec=eps * np.eye(n_x))
    K, _ = actinf_gain(actinf_schedule(det_model, goal, T), estimate, det_model, goal)
    K_lqg, _ = lqg_gain(lqg_schedule(det_model, goal, T), np.zeros(n_x), det_model, goal)
    return gain_gap(K, K_lqg)
