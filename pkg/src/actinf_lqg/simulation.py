"""Closed-loop sliding-horizon simulation.

Each step ``t = 1..N``:

1. the true system moves, ``x_t ~ N(A x_{t-1} + B u_{t-1}, W_w^-1)``, and
   emits ``y_t ~ N(C x_t, W_v^-1)`` (means only when noise is off);
2. the filter absorbs ``(u_{t-1}, y_t)`` and yields the estimate ``p_e``;
3. the controller acts with ``u_t = -K_t x_hat_t``.

``u_0 = 0`` since no observation is available before ``t = 1``. Noise is
drawn from a Philox generator so that reruns are bit-identical.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import estimation
from .control import (
    actinf_gain,
    actinf_schedule,
    goal_conditioned_covariance,
    lqg_gain,
    lqg_schedule,
)
from .freenergy import step_report
from .model import BENCHMARK_HORIZON, BENCHMARK_X0, GoalPrior, LinearGaussianModel

log = logging.getLogger(__name__)

CONTROLLER_KINDS = ("actinf", "lqg", "none")
RNG_ALGORITHM = "Philox"


class SimulationDiverged(RuntimeError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class Controller:
    """Controller kind plus the goal prior / cost it is built from.

    The goal also defines the stage cost (unscaled Q, R) and the free
    energy evaluated along the run, for every kind including ``none``.
    """

    kind: str
    goal: GoalPrior

    def __post_init__(self):
        if self.kind not in CONTROLLER_KINDS:
            raise ValueError(f"unknown controller {self.kind!r}; expected one of {CONTROLLER_KINDS}")

    @property
    def label(self) -> str:
        return f"{self.kind}_{self.goal.lam:g}"


@dataclass
class SimulationTrace:
    t: np.ndarray
    x_true: np.ndarray
    y: np.ndarray
    u: np.ndarray
    inst_cost: np.ndarray
    cum_cost: np.ndarray
    fe_past: np.ndarray
    fe_future: np.ndarray
    fe_total: np.ndarray
    # running sum of fe_total
    fe_cum: np.ndarray
    # filter covariances and V'_t per step, filled when requested
    matrices: list = field(default_factory=list)

    def __len__(self):
        return len(self.t)


def _finalize(rows, n_x, n_u, n_y, matrices) -> SimulationTrace:
    def col(key, width=None):
        if width is None:
            return np.array([r[key] for r in rows], dtype=float)
        return np.array([r[key] for r in rows], dtype=float).reshape(len(rows), width)

    fe_total = col("fe_total")
    inst = col("inst_cost")
    return SimulationTrace(
        t=np.array([r["t"] for r in rows], dtype=int),
        x_true=col("x", n_x),
        y=col("y", n_y),
        u=col("u", n_u),
        inst_cost=inst,
        cum_cost=np.cumsum(inst),
        fe_past=col("fe_past"),
        fe_future=col("fe_future"),
        fe_total=fe_total,
        fe_cum=np.cumsum(fe_total),
        matrices=matrices,
    )


def simulate(
    model: LinearGaussianModel,
    controller: Controller,
    T: int = BENCHMARK_HORIZON,
    N: int = 100,
    seed: int = 0,
    noise_on: bool = True,
    x0=BENCHMARK_X0,
    record_matrices: bool = False,
) -> SimulationTrace:
    if N < 1:
        raise ValueError("N must be >= 1")
    goal = controller.goal
    goal.check(model)
    d = model.dims
    x = np.array(x0, dtype=float)
    if x.shape != (d.n_x,):
        raise ValueError(f"x0 must have shape ({d.n_x},)")

    if controller.kind == "actinf":
        schedule = actinf_schedule(model, goal, T)
    elif controller.kind == "lqg":
        schedule = lqg_schedule(model, goal, T)
    else:
        schedule = None

    rng = np.random.Generator(np.random.Philox(seed))
    L_w = np.linalg.cholesky(model.V_w)
    L_v = np.linalg.cholesky(model.V_v)
    fs = estimation.init(model.prior, d.n_x)
    u = np.zeros(d.n_u)
    rows, matrices = [], []
    for t in range(1, N + 1):
        x = model.A @ x + model.B @ u
        y = model.C @ x
        if noise_on:
            x = x + L_w @ rng.standard_normal(d.n_x)
            y = model.C @ x + L_v @ rng.standard_normal(d.n_y)
        if not np.all(np.isfinite(x)):
            trace = _finalize(rows, d.n_x, d.n_u, d.n_y, matrices)
            raise SimulationDiverged(f"state became non-finite at t={t}", trace)

        fs = estimation.step(fs, u, y, model)
        if controller.kind == "actinf":
            _, u = actinf_gain(schedule, fs.estimate, model, goal)
        elif controller.kind == "lqg":
            _, u = lqg_gain(schedule, fs.estimate.mean, model, goal)
        else:
            u = np.zeros(d.n_u)

        report = step_report(fs, model, goal, T)
        if record_matrices:
            matrices.append(
                {"filter_cov": fs.estimate.cov, "V_prime": goal_conditioned_covariance(fs.estimate, goal)}
            )
        rows.append(
            {
                "t": t,
                "x": x.copy(),
                "y": y.copy(),
                "u": u.copy(),
                "inst_cost": goal.stage_cost(x, u),
                "fe_past": report.past_part,
                "fe_future": report.future_part,
                "fe_total": report.total,
            }
        )
    log.debug("simulated %s seed=%d N=%d", controller.label, seed, N)
    return _finalize(rows, d.n_x, d.n_u, d.n_y, matrices)


@dataclass(frozen=True)
class SweepRow:
    controller: str
    lam: float
    seed: int
    final_cum_cost: float
    final_fe_total: float
    final_fe_cum: float
    max_abs_u: float
    u0_norm: float


def summarize(controller: Controller, seed: int, trace: SimulationTrace) -> SweepRow:
    return SweepRow(
        controller=controller.kind,
        lam=controller.goal.lam,
        seed=seed,
        final_cum_cost=float(trace.cum_cost[-1]),
        final_fe_total=float(trace.fe_total[-1]),
        final_fe_cum=float(trace.fe_cum[-1]),
        max_abs_u=float(np.abs(trace.u).max()),
        u0_norm=float(np.linalg.norm(trace.u[0])),
    )


def sweep_runs(model, Q, R, lambdas, T, N, seeds, noise_on=True, x0=BENCHMARK_X0, lqg_lambda=1.0):
    """Yield ``(controller, seed, trace)``: the LQG baseline, then each lambda."""
    for seed in seeds:
        controllers = [Controller("lqg", GoalPrior(Q, R, lqg_lambda))]
        controllers += [Controller("actinf", GoalPrior(Q, R, lam)) for lam in lambdas]
        for controller in controllers:
            yield controller, seed, simulate(model, controller, T, N, seed, noise_on, x0)


def sweep_lambda(model, Q, R, lambdas, T, N, seeds, noise_on=True, x0=BENCHMARK_X0, lqg_lambda=1.0):
    """One summary row per (controller, seed); LQG baseline rows included."""
    if any(not lam > 0 for lam in lambdas):
        raise ValueError("lambda must be > 0")
    return [
        summarize(c, seed, trace)
        for c, seed, trace in sweep_runs(model, Q, R, lambdas, T, N, seeds, noise_on, x0, lqg_lambda)
    ]
