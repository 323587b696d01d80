"""Explicit belief propagation on one section of the goal-constrained model.

Two fixed schedules are provided. ``backward_slice`` propagates the backward
state precision ``P_k`` through one future section (messages 1-11) and
``control_slice`` computes the control posterior in the present section
(messages 1-12). Every intermediate message is returned so it can be
inspected; the functions serve as an independent route to the closed-form
gains in :mod:`actinf_lqg.control`.

Section layout, left to right::

    x_{k-1} -[=]- A -[+]- N(., W_w) -[=]- x_k
             |        |              |
        N(0, lam Q)   B          C - N(., W_v) - y_k
                      |
                 N(0, lam R) - u
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gaussian import (
    DimensionError,
    Gaussian,
    SingularGaussianError,
    affine_pull,
    affine_push,
    convolve,
    is_psd,
    multiply,
    symmetrize,
)
from .model import GoalPrior, LinearGaussianModel

MessageSet = dict  # label (1..12) -> Gaussian, in schedule order


@dataclass(frozen=True, eq=False)
class SliceSpec:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    W_w: np.ndarray
    W_v: np.ndarray
    lam: float
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        for name in ("A", "B", "C", "W_w", "W_v", "Q", "R"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=float)))
        n_x, n_u = self.B.shape
        n_y = self.C.shape[0]
        shapes = {
            "A": (n_x, n_x), "C": (n_y, n_x), "W_w": (n_x, n_x),
            "W_v": (n_y, n_y), "Q": (n_x, n_x), "R": (n_u, n_u),
        }
        for name, shape in shapes.items():
            if getattr(self, name).shape != shape:
                raise DimensionError(f"{name} must be {shape}, got {getattr(self, name).shape}")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if not is_psd(self.Q):
            raise ValueError("Q must be PSD")

    @classmethod
    def from_model(cls, model: LinearGaussianModel, goal: GoalPrior) -> "SliceSpec":
        return cls(model.A, model.B, model.C, model.W_w, model.W_v, goal.lam, goal.Q, goal.R)


def _future_messages(spec: SliceSpec, P, include_observation):
    """Messages 1-6, shared by both schedules."""
    n_x, n_u = spec.B.shape
    n_y = spec.C.shape[0]
    msgs = MessageSet()
    msgs[1] = Gaussian(np.zeros(n_x), prec=P)
    if include_observation:
        msgs[2] = Gaussian(np.zeros(n_y), prec=np.zeros((n_y, n_y)))
        msgs[3] = affine_pull(msgs[2], spec.C)
        msgs[4] = multiply(msgs[1], msgs[3], allow_improper=True)
    else:
        msgs[4] = msgs[1]
    msgs[5] = convolve(msgs[4], symmetrize(np.linalg.inv(spec.W_w)))
    if spec.lam <= 0:
        raise ValueError("lambda must be > 0 for the control prior message")
    msgs[6] = Gaussian(np.zeros(n_u), prec=spec.lam * spec.R)
    return msgs


def backward_slice(spec: SliceSpec, P_k, include_observation=True):
    """Propagate the backward precision over x_k to x_{k-1}.

    Returns ``(P_prev, msgs)`` where ``P_prev`` is the precision of message 11.
    Nothing here inverts ``P_k``, so singular inputs are fine.
    """
    P_k = symmetrize(P_k)
    if not is_psd(P_k):
        raise ValueError("P_k must be symmetric PSD")
    msgs = _future_messages(spec, P_k, include_observation)
    msgs[7] = affine_push(msgs[6], spec.B)
    msgs[8] = convolve(msgs[5], msgs[7].cov, offset=-msgs[7].mean)
    msgs[9] = affine_pull(msgs[8], spec.A)
    msgs[10] = Gaussian(np.zeros(spec.A.shape[0]), prec=spec.lam * spec.Q)
    msgs[11] = multiply(msgs[9], msgs[10], allow_improper=True)
    return msgs[11].prec, dict(sorted(msgs.items()))


def control_slice(spec: SliceSpec, P_next, estimate: Gaussian, include_observation=True):
    """Control posterior for the present section.

    ``estimate`` is the normalized filtered state belief. The control
    posterior is the product of the control prior (6) and the backward
    message through B (12); its mode (= mean) is the action.
    Returns ``(u_mode, q_u, msgs)``.
    """
    P_next = symmetrize(P_next)
    if not is_psd(P_next):
        raise ValueError("P_next must be symmetric PSD")
    if estimate.dim != spec.A.shape[0]:
        raise DimensionError(f"estimate has dim {estimate.dim}, expected {spec.A.shape[0]}")
    msgs = _future_messages(spec, P_next, include_observation)
    msgs[7] = Gaussian(estimate.mean, prec=estimate.prec)
    msgs[8] = Gaussian(np.zeros(spec.A.shape[0]), prec=spec.lam * spec.Q)
    msgs[9] = multiply(msgs[7], msgs[8])
    msgs[10] = affine_push(msgs[9], spec.A)
    msgs[11] = convolve(msgs[5], msgs[10].cov, offset=-msgs[10].mean)
    msgs[12] = affine_pull(msgs[11], spec.B)
    try:
        q_u = multiply(msgs[6], msgs[12])
    except SingularGaussianError as exc:
        raise SingularGaussianError("control posterior has singular precision; no unique mode") from exc
    return q_u.mean.copy(), q_u, dict(sorted(msgs.items()))
