"""Free energy of the goal-constrained model at its exact posterior.

At the optimum the posterior divergence vanishes and the free energy equals
the surprise ``-log Z``. With the goal prior attached, ``Z`` factors into the
evidence of past observations (``C_e``) and the mass of the future part

    Z_future = int p_e(x_t) N(x_t | 0, (lam Q)^-1)
               prod_k N(x_{k+1} | A x_k + B u_k, W_w^-1) N(u_k | 0, (lam R)^-1)
                      N(x_{k+1} | 0, (lam Q)^-1)

Future observations integrate out to one because the goal prior does not
depend on them. The terminal section carries a state factor only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimation import FilterState
from .gaussian import Gaussian, affine_pull, affine_push, convolve, multiply, symmetrize
from .model import GoalPrior, LinearGaussianModel


@dataclass(frozen=True)
class FreeEnergyReport:
    total: float
    future_part: float
    past_part: float


def _goal_state_factor(goal: GoalPrior):
    return Gaussian(np.zeros(goal.Q.shape[0]), prec=goal.lam * goal.Q)


def _transition_cov(model: LinearGaussianModel, goal: GoalPrior):
    # process noise plus the control prior pushed through B
    B = model.B
    return symmetrize(model.V_w + B @ np.linalg.solve(goal.lam * goal.R, B.T))


def _check_goal(goal):
    if goal is None or not goal.lam > 0:
        raise ValueError("future free energy is undefined without a control prior (lambda must be > 0)")


def future_free_energy(estimate: Gaussian, model: LinearGaussianModel, goal: GoalPrior, T: int) -> float:
    """-log Z_future by forward elimination x_t, x_{t+1}, ..., x_{t+T}."""
    _check_goal(goal)
    goal.check(model)
    gx = _goal_state_factor(goal)
    sigma = _transition_cov(model, goal)
    alpha = multiply(estimate.normalized(), gx, allow_improper=True)
    for _ in range(int(T)):
        alpha = convolve(affine_push(alpha, model.A), sigma)
        alpha = multiply(alpha, gx, allow_improper=True)
    return -alpha.log_weight


def future_free_energy_backward(estimate: Gaussian, model: LinearGaussianModel, goal: GoalPrior, T: int) -> float:
    """Same quantity, eliminating x_{t+T} first and p_e last."""
    _check_goal(goal)
    goal.check(model)
    gx = _goal_state_factor(goal)
    sigma = _transition_cov(model, goal)
    beta = gx
    for _ in range(int(T)):
        beta = affine_pull(convolve(beta, sigma), model.A)
        beta = multiply(beta, gx, allow_improper=True)
    return -multiply(estimate.normalized(), beta, allow_improper=True).log_weight


def step_report(fs: FilterState, model: LinearGaussianModel, goal: GoalPrior, T: int) -> FreeEnergyReport:
    past = -fs.log_evidence
    future = future_free_energy(fs.estimate, model, goal, T)
    return FreeEnergyReport(total=past + future, future_part=future, past_part=past)
