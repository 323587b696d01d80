"""Command line front end.

    actinf-lqg run <config> [--noise-off] [--seed N] [--out DIR]
    actinf-lqg check <config>

Exit codes: 0 ok, 1 oracle check failed, 2 invalid config, 3 divergence.
Command-line flags take precedence over the config file.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .control import actinf_gain, actinf_schedule
from .ffg import SliceSpec, backward_slice, control_slice
from .gaussian import Gaussian
from .model import GoalPrior
from .simulation import Controller, SimulationDiverged, simulate, summarize

log = logging.getLogger("actinf_lqg")

ORACLE_TOL = 1e-8
SUMMARY_FIELDS = (
    "controller", "lambda", "seed", "final_cum_cost", "final_fe_total",
    "final_fe_cum", "max_abs_u", "u0_norm",
)


def fmt(value) -> str:
    return format(float(value), ".17g")


def trace_header(n_x, n_y, n_u):
    return (
        ["t"]
        + [f"x{i + 1}" for i in range(n_x)]
        + [f"y{i + 1}" for i in range(n_y)]
        + [f"u{i + 1}" for i in range(n_u)]
        + ["inst_cost", "cum_cost", "fe_past", "fe_future", "fe_total"]
    )


def write_trace(path: Path, trace, dims):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trace_header(dims.n_x, dims.n_y, dims.n_u))
        for i in range(len(trace)):
            w.writerow(
                [str(int(trace.t[i]))]
                + [fmt(v) for v in trace.x_true[i]]
                + [fmt(v) for v in trace.y[i]]
                + [fmt(v) for v in trace.u[i]]
                + [fmt(v) for v in (trace.inst_cost[i], trace.cum_cost[i], trace.fe_past[i],
                                    trace.fe_future[i], trace.fe_total[i])]
            )


def _controllers(cfg: ExperimentConfig):
    out = []
    for kind in cfg.controllers:
        if kind == "actinf":
            out += [Controller("actinf", GoalPrior(cfg.Q, cfg.R, lam)) for lam in cfg.lambdas]
        else:
            out.append(Controller(kind, GoalPrior(cfg.Q, cfg.R, cfg.lqg_lambda)))
    return out


def run(cfg: ExperimentConfig) -> int:
    cfg.out.mkdir(parents=True, exist_ok=True)
    dims = cfg.model.dims
    rows = []
    for seed in cfg.seeds:
        for controller in _controllers(cfg):
            path = cfg.out / f"trace_{controller.label}_{seed}.csv"
            try:
                trace = simulate(cfg.model, controller, cfg.horizon, cfg.steps, seed, cfg.noise_on, cfg.x0)
            except SimulationDiverged as exc:
                if exc.trace is not None and len(exc.trace):
                    write_trace(path, exc.trace, dims)
                print(f"error: {controller.label} seed={seed}: {exc}", file=sys.stderr)
                return 3
            write_trace(path, trace, dims)
            rows.append(summarize(controller, seed, trace))
            log.info("wrote %s", path)
    with (cfg.out / "summary.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for r in rows:
            w.writerow([r.controller, fmt(r.lam), str(r.seed), fmt(r.final_cum_cost), fmt(r.final_fe_total),
                        fmt(r.final_fe_cum), fmt(r.max_abs_u), fmt(r.u0_norm)])
    print(f"wrote {len(rows)} traces and summary.csv to {cfg.out}")
    return 0


def oracle_deviation(cfg: ExperimentConfig, lam: float):
    """Max abs deviation of closed-form P_k and u_t from explicit message passing."""
    model = cfg.model
    goal = GoalPrior(cfg.Q, cfg.R, lam)
    spec = SliceSpec.from_model(model, goal)
    schedule = actinf_schedule(model, goal, cfg.horizon)
    P = schedule.P[-1]
    dP = 0.0
    for k in range(cfg.horizon - 2, -1, -1):
        P, _ = backward_slice(spec, P)
        dP = max(dP, float(np.abs(P - schedule.P[k]).max()))
    estimate = Gaussian(cfg.x0, prec=np.eye(model.dims.n_x))
    _, u = actinf_gain(schedule, estimate, model, goal)
    u_mp, _, _ = control_slice(spec, schedule.P_next, estimate)
    return dP, float(np.abs(u - u_mp).max())


def check(cfg: ExperimentConfig) -> int:
    worst = 0.0
    for lam in cfg.lambdas or (cfg.lqg_lambda,):
        dP, du = oracle_deviation(cfg, lam)
        print(f"lambda={lam:g}: max |dP| = {dP:.3e}, max |du| = {du:.3e}")
        worst = max(worst, dP, du)
    ok = worst < ORACLE_TOL
    print(f"max deviation {worst:.3e} ({'ok' if ok else 'FAIL'}, tolerance {ORACLE_TOL:g})")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="actinf-lqg", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="simulate and write CSV traces")
    p_run.add_argument("config")
    p_run.add_argument("--noise-off", action="store_true", help="propagate means only (overrides noise_on)")
    p_run.add_argument("--seed", type=int, help="run a single seed instead of the configured list")
    p_run.add_argument("--out", type=Path, help="output directory (overrides config)")
    p_check = sub.add_parser("check", help="validate config and run the message-passing self-test")
    p_check.add_argument("config")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.command == "check":
        return check(cfg)
    cfg = cfg.override(
        noise_on=False if args.noise_off else None,
        seeds=(args.seed,) if args.seed is not None else None,
        out=args.out,
    )
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
