"""Experiment configuration files (TOML).

Grammar::

    [model]   A, B, C, W_w, W_v      row-major nested lists (precisions, not covariances)
    [prior]   mean, precision        initial-state belief; default vague N_W(0, 1e-8 I)
    [goal]    Q, R, lambdas          cost matrices and the list of goal-prior scales
    [run]     controllers            subset of ["lqg", "actinf", "none"]
              lqg_lambda             scale used for the LQG baseline's free energy (gain is invariant)
              horizon, steps         lookahead T and number of closed-loop steps N
              seeds, noise_on, x0, out
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .gaussian import Gaussian, is_pd, is_psd
from .model import VAGUE_PRECISION, LinearGaussianModel

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    model: LinearGaussianModel
    Q: np.ndarray
    R: np.ndarray
    lambdas: tuple
    controllers: tuple
    lqg_lambda: float
    horizon: int
    steps: int
    seeds: tuple
    noise_on: bool
    x0: np.ndarray
    out: Path

    def override(self, **changes) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


def default_config_path() -> Path:
    return Path(str(resources.files("actinf_lqg") / "data" / "default.toml"))


def _get(table, key, field, default=None, required=True):
    if key in table:
        return table[key]
    if required and default is None:
        raise ConfigError(field, "missing")
    return default


def _matrix(value, field):
    try:
        M = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(field, "must be a nested list of numbers") from exc
    if M.ndim != 2 or M.size == 0:
        raise ConfigError(field, f"must be a non-empty matrix (list of rows), got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ConfigError(field, "has non-finite entries")
    return M


def _vector(value, field, n=None):
    try:
        v = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(field, "must be a list of numbers") from exc
    if v.ndim != 1 or (n is not None and v.shape != (n,)):
        raise ConfigError(field, f"must be a vector of length {n}, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ConfigError(field, "has non-finite entries")
    return v


def _shape(M, shape, field):
    if M.shape != shape:
        raise ConfigError(field, f"must be {shape[0]}x{shape[1]}, got {M.shape[0]}x{M.shape[1]}")


def _symmetric(M, field, definite):
    if not np.allclose(M, M.T, rtol=1e-10, atol=0):
        raise ConfigError(field, "must be symmetric")
    if definite and not is_pd(M):
        raise ConfigError(field, "must be positive definite")
    if not definite and not is_psd(M):
        raise ConfigError(field, "must be positive semi-definite")


def _positive_int(value, field):
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(field, f"must be a positive integer, got {value!r}")
    return value


def parse_config(data: dict) -> ExperimentConfig:
    for section in ("model", "goal", "run"):
        if not isinstance(data.get(section), dict):
            raise ConfigError(section, "missing section")
    m, g, r = data["model"], data["goal"], data["run"]
    prior = data.get("prior", {})

    A = _matrix(_get(m, "A", "A"), "A")
    if A.shape[0] != A.shape[1]:
        raise ConfigError("A", f"must be square, got {A.shape[0]}x{A.shape[1]}")
    n_x = A.shape[0]
    B = _matrix(_get(m, "B", "B"), "B")
    if B.shape[0] != n_x:
        raise ConfigError("B", f"must have {n_x} rows, got {B.shape[0]}")
    n_u = B.shape[1]
    C = _matrix(_get(m, "C", "C"), "C")
    if C.shape[1] != n_x:
        raise ConfigError("C", f"must have {n_x} columns, got {C.shape[1]}")
    n_y = C.shape[0]
    W_w = _matrix(_get(m, "W_w", "W_w"), "W_w")
    _shape(W_w, (n_x, n_x), "W_w")
    _symmetric(W_w, "W_w", definite=True)
    W_v = _matrix(_get(m, "W_v", "W_v"), "W_v")
    _shape(W_v, (n_y, n_y), "W_v")
    _symmetric(W_v, "W_v", definite=True)

    prior_mean = _vector(prior.get("mean", [0.0] * n_x), "prior.mean", n_x)
    prior_prec = _matrix(prior.get("precision", (VAGUE_PRECISION * np.eye(n_x)).tolist()), "prior.precision")
    _shape(prior_prec, (n_x, n_x), "prior.precision")
    _symmetric(prior_prec, "prior.precision", definite=True)

    Q = _matrix(_get(g, "Q", "Q"), "Q")
    _shape(Q, (n_x, n_x), "Q")
    _symmetric(Q, "Q", definite=False)
    R = _matrix(_get(g, "R", "R"), "R")
    _shape(R, (n_u, n_u), "R")
    _symmetric(R, "R", definite=True)
    lambdas = _vector(_get(g, "lambdas", "lambdas", default=[], required=False), "lambdas")
    if np.any(lambdas <= 0):
        raise ConfigError("lambdas", "lambda must be > 0")

    controllers = tuple(_get(r, "controllers", "controllers", default=("lqg", "actinf"), required=False))
    for c in controllers:
        if c not in ("lqg", "actinf", "none"):
            raise ConfigError("controllers", f"unknown controller {c!r}")
    lqg_lambda = float(_get(r, "lqg_lambda", "lqg_lambda", default=1.0, required=False))
    if not lqg_lambda > 0:
        raise ConfigError("lqg_lambda", "lambda must be > 0")
    horizon = _positive_int(_get(r, "horizon", "horizon", default=10, required=False), "horizon")
    steps = _positive_int(_get(r, "steps", "steps", default=100, required=False), "steps")
    seeds = _get(r, "seeds", "seeds", default=[0], required=False)
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) and s >= 0 for s in seeds):
        raise ConfigError("seeds", "must be a non-empty list of non-negative integers")
    noise_on = _get(r, "noise_on", "noise_on", default=True, required=False)
    if not isinstance(noise_on, bool):
        raise ConfigError("noise_on", "must be true or false")
    x0 = _vector(_get(r, "x0", "x0"), "x0", n_x)
    out = Path(_get(r, "out", "out", default="out", required=False))

    model = LinearGaussianModel(A, B, C, W_w, W_v, Gaussian(prior_mean, prec=prior_prec))
    return ExperimentConfig(
        model=model,
        Q=Q,
        R=R,
        lambdas=tuple(float(v) for v in lambdas),
        controllers=controllers,
        lqg_lambda=lqg_lambda,
        horizon=horizon,
        steps=steps,
        seeds=tuple(seeds),
        noise_on=noise_on,
        x0=x0,
        out=out,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"invalid TOML in {path}: {exc}") from exc
    return parse_config(data)
