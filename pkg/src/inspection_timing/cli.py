"""Command-line interface: ``solve``, ``verify``, ``simulate`` and ``sweep``."""

from __future__ import annotations

import argparse
import csv
import io as _io
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional

import numpy as np

from . import io
from .errors import (DivergentCost, Infeasible, InfeasibleConstraint, InvalidParams,
                     NonConvergence, WrongRegime)
from .model import ModelParams, derive
from .oracle.report import verify_policy
from .payoffs import cost_ratio, expected_payoff, loss_shirk, loss_shirk_x, policy_cost
from .policies import AlwaysWork, strategy_from_dict, strategy_to_dict
from .sim import SimConfig, estimate
from .solver import solve_lambda_bar_b, solve_optimal

log = logging.getLogger("inspection_timing")

EXIT_OK, EXIT_INFEASIBLE, EXIT_NONCONVERGENCE, EXIT_CONFIG = 0, 2, 3, 4
AXES = ("t", "x", "lambda_b", "lambda_ratio", "delta", "rho")
CONFIG_KEYS = {"params", "policy", "strategy", "seed", "runs", "dt", "axis", "min", "max", "n",
               "workers", "out", "trace"}


class ConfigError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="inspection-timing",
                                description="Optimal inspection schedules and their verification.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file with any of the options below; flags override it")
        sp.add_argument("--params", help="model parameters: JSON file or inline JSON")
        sp.add_argument("--out", help="write output here instead of stdout")

    sp = sub.add_parser("solve", help="compute the optimal policy")
    common(sp)

    sp = sub.add_parser("verify", help="check a policy with the DP, deviation and residual oracles")
    common(sp)
    sp.add_argument("--policy", help="policy JSON (file or inline), or 'none'; default: solve first")
    sp.add_argument("--dt", type=float, help="DP time step (default 1e-3)")

    sp = sub.add_parser("simulate", help="Monte Carlo estimates of cost and agent payoff")
    common(sp)
    sp.add_argument("--policy", help="policy JSON (file or inline); default: the optimal policy")
    sp.add_argument("--strategy", help="agent plan JSON; default: always work")
    sp.add_argument("--runs", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--trace", help="per-run CSV output path")

    sp = sub.add_parser("sweep", help="tabulate curves along one axis as CSV")
    common(sp)
    sp.add_argument("--axis", choices=AXES)
    sp.add_argument("--min", type=float, dest="min")
    sp.add_argument("--max", type=float, dest="max")
    sp.add_argument("--n", type=int)
    sp.add_argument("--workers", type=int)
    return p


def _options(args) -> dict:
    opts = {}
    if args.config:
        cfg = io.load_json_arg(args.config)
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(cfg) - CONFIG_KEYS - {"command"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        opts.update(cfg)
    for key, value in vars(args).items():
        if key in ("config", "command") or value is None:
            continue
        opts[key] = value
    return opts


def _params(opts) -> ModelParams:
    if "params" not in opts:
        raise ConfigError("--params is required")
    raw = opts["params"]
    obj = io.load_json_arg(raw) if isinstance(raw, str) else raw
    return io.params_from_json(obj)


def _policy(opts, key="policy"):
    raw = opts.get(key)
    if raw is None:
        return None, False
    obj = io.load_json_arg(raw) if isinstance(raw, str) else raw
    return io.policy_from_json(obj), True


# --- commands -------------------------------------------------------------------------

def run_solve(opts) -> int:
    params = _params(opts)
    sol = solve_optimal(params)
    out = sol.to_dict()
    out["params"] = params.to_dict()
    io.emit(io.dumps(out), opts.get("out"))
    return EXIT_OK


def run_verify(opts) -> int:
    params = _params(opts)
    policy, given = _policy(opts)
    solution = None
    if not given:
        solution = solve_optimal(params)
        policy = solution.policy
    report = verify_policy(params, policy, dt=opts.get("dt") or 1e-3, solution=solution)
    report["params"] = params.to_dict()
    io.emit(io.dumps(report), opts.get("out"))
    return EXIT_OK


def run_simulate(opts) -> int:
    params = _params(opts)
    policy, given = _policy(opts)
    if not given:
        policy = solve_optimal(params).policy
    if policy is None:
        raise ConfigError("simulation needs an inspection policy")
    raw = opts.get("strategy")
    if raw is None:
        strategy = AlwaysWork()
    else:
        strategy = strategy_from_dict(io.load_json_arg(raw) if isinstance(raw, str) else raw)
    cfg = SimConfig(n_runs=int(opts.get("runs") or 100_000), seed=int(opts.get("seed") or 0),
                    workers=int(opts.get("workers") or 1))
    rep = estimate(policy, strategy, params, cfg, keep_runs=bool(opts.get("trace")))
    d = derive(params)
    # closed form for repeating the plan every gap: W = a(W), with a affine in W
    a0 = expected_payoff(strategy, policy, params, 0.0)
    a1 = expected_payoff(strategy, policy, params, 1.0)
    closed = {"agent_payoff": a0 / (1 - (a1 - a0))}
    if all(a == 1 for _, _, a in strategy.segments()):
        closed["cost"] = policy_cost(policy, d)
    out = {"policy": policy.to_dict(), "strategy": strategy_to_dict(strategy), "seed": cfg.seed,
           "report": rep.to_dict(), "closed_form": closed, "params": params.to_dict()}
    if opts.get("trace"):
        rep.write_trace(opts["trace"])
    io.emit(io.dumps(out), opts.get("out"))
    return EXIT_OK


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(float(v))


def _solve_row(params: ModelParams, value: float, axis: str) -> list:
    try:
        p = params.with_(**{axis: value})
        sol = solve_optimal(p)
        return [value, sol.policy.kind, sol.tau_star, sol.t_bar, sol.tau_hat, sol.gamma_star,
                sol.pi_star, sol.cost, "ok"]
    except (Infeasible, InfeasibleConstraint, DivergentCost, InvalidParams) as exc:
        log.info("%s=%r infeasible: %s", axis, value, exc)
        return [value] + [None] * 7 + ["infeasible"]
    except WrongRegime as exc:
        log.info("%s=%r outside covered regimes: %s", axis, value, exc)
        return [value] + [None] * 7 + ["wrong_regime"]
    except NonConvergence as exc:
        log.info("%s=%r did not converge: %s", axis, value, exc)
        return [value] + [None] * 7 + ["nonconvergence"]


def _sweep_row(task) -> list:
    axis, value, params = task
    d = derive(params)
    if axis == "t":
        return [value, loss_shirk(value, d, params.delta), math.exp(-d.lambda1 * value), "ok"]
    if axis == "x":
        if not 0 < value <= 1:
            return [value, None, None, "infeasible"]
        return [value, loss_shirk_x(value, d, params.delta), value, "ok"]
    if axis == "lambda_ratio":
        try:
            return [value, cost_ratio(d.mu, value), "ok"]
        except InvalidParams:
            return [value, None, "infeasible"]
    if axis == "delta" and value <= 0:
        return [value] + [None] * 7 + ["infeasible"]
    return _solve_row(params, value, axis)


HEADERS = {
    "t": ["t", "loss_shirk", "discount_cost", "status"],
    "x": ["x", "loss_shirk", "discount_cost", "status"],
    "lambda_ratio": ["lambda_ratio", "cost_ratio", "status"],
}
SOLVE_HEADER = ["policy_kind", "tau_star", "t_bar", "tau_hat", "gamma_star", "pi_star", "cost", "status"]


def run_sweep(opts) -> int:
    params = _params(opts)
    axis = opts.get("axis")
    if axis not in AXES:
        raise ConfigError(f"--axis must be one of {AXES}")
    lo, hi, n = opts.get("min"), opts.get("max"), opts.get("n")
    if lo is None or hi is None or n is None:
        raise ConfigError("--min, --max and --n are required")
    lo, hi, n = float(lo), float(hi), int(n)
    if not lo < hi or n < 2:
        raise ConfigError("need min < max and n >= 2")
    values = np.linspace(lo, hi, n).tolist()
    tasks = [(axis, v, params) for v in values]
    workers = int(opts.get("workers") or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_sweep_row, tasks, chunksize=max(1, n // (4 * workers))))
    else:
        rows = [_sweep_row(t) for t in tasks]
    header = HEADERS.get(axis, [axis] + SOLVE_HEADER)
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    extra = ""
    if axis == "lambda_b" and not params.perfect:
        try:
            lbb = solve_lambda_bar_b(params.lambda_g, params.r, params.delta, params.u0, params.u1)
            extra = f"lambda_bar_b={lbb!r}"
        except Exception as exc:  # the cutoff is informative only
            log.info("cutoff unavailable: %s", exc)
    if extra:
        log.info(extra)
    io.emit(buf.getvalue(), opts.get("out"))
    bad = any(row[-1] == "infeasible" for row in rows)
    return EXIT_INFEASIBLE if bad else EXIT_OK


COMMANDS = {"solve": run_solve, "verify": run_verify, "simulate": run_simulate, "sweep": run_sweep}


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=os.environ.get("INSPECT_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    args = _parser().parse_args(argv)
    try:
        opts = _options(args)
        return COMMANDS[args.command](opts)
    except Infeasible as exc:
        msg = {"error": "infeasible", "message": str(exc)}
        if exc.report is not None:
            msg["assumptions"] = exc.report.to_dict()
        sys.stderr.write(io.dumps(msg))
        return EXIT_INFEASIBLE
    except (InfeasibleConstraint, DivergentCost) as exc:
        sys.stderr.write(io.dumps({"error": "infeasible", "message": str(exc)}))
        return EXIT_INFEASIBLE
    except NonConvergence as exc:
        sys.stderr.write(io.dumps({"error": "nonconvergence", "message": str(exc)}))
        return EXIT_NONCONVERGENCE
    except (ConfigError, InvalidParams, WrongRegime, OSError) as exc:
        sys.stderr.write(io.dumps({"error": "config", "message": str(exc)}))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
