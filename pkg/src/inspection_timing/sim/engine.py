"""Event-driven Monte Carlo of project trajectories under a renewal
inspection policy and a per-gap action plan.

Runs are vectorized with numpy.  Within each constant-action segment the
next event is the first of breakthrough, breakdown and a change in the hidden
evidence state, drawn as one exponential with the summed rate and a second
uniform for its type.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import InvalidParams
from ..model import ModelParams, derive
from ..payoffs import policy_cost
from ..policies import (ActionStrategy, AlwaysWork, DelayedExponential, DiscreteGap, Exponential,
                        InspectionPolicy, Periodic)
from . import rng

log = logging.getLogger(__name__)

END_CAUSES = ("breakthrough", "breakdown", "termination-after-fail", "censored")
BREAKTHROUGH, BREAKDOWN, FAILED, CENSORED, ALIVE = 0, 1, 2, 3, -1


@dataclass(frozen=True)
class SimConfig:
    n_runs: int = 100_000
    seed: int = 0
    horizon: Optional[float] = None
    analytic_tail: bool = True
    workers: int = 1
    chunk: int = 1 << 16

    def __post_init__(self):
        if int(self.n_runs) < 1:
            raise InvalidParams("n_runs must be >= 1")
        if self.horizon is not None and not self.horizon > 0:
            raise InvalidParams("horizon must be > 0")
        if int(self.workers) < 1 or int(self.chunk) < 1:
            raise InvalidParams("workers and chunk must be >= 1")


@dataclass
class SimReport:
    n_runs: int
    mean_cost: float
    se_cost: float
    mean_agent_payoff: float
    se_agent_payoff: float
    end_causes: dict
    n_inspections: float
    runs: Optional[dict] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "n_runs": self.n_runs,
            "mean_cost": {"mean": self.mean_cost, "se": self.se_cost},
            "mean_agent_payoff": {"mean": self.mean_agent_payoff, "se": self.se_agent_payoff},
            "end_causes": dict(self.end_causes),
            "n_inspections": self.n_inspections,
        }

    def write_trace(self, path) -> None:
        if self.runs is None:
            raise InvalidParams("per-run data was not kept; call estimate(..., keep_runs=True)")
        r = self.runs
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["run", "end_cause", "end_time", "n_inspections", "disc_cost", "disc_payoff"])
            for i in range(len(r["cost"])):
                w.writerow([i, END_CAUSES[r["end_cause"][i]], repr(float(r["end_time"][i])),
                            int(r["n_inspections"][i]), repr(float(r["cost"][i])),
                            repr(float(r["payoff"][i]))])


def default_horizon(params: ModelParams) -> float:
    d = derive(params)
    return 50.0 / min(params.r, d.lambda0, d.lambda1)


def _sample_gap(policy: InspectionPolicy, u: np.ndarray) -> np.ndarray:
    if isinstance(policy, Periodic):
        return np.full(u.shape, policy.tau)
    if isinstance(policy, Exponential):
        return -np.log(u) / policy.gamma
    if isinstance(policy, DelayedExponential):
        out = np.full(u.shape, policy.tau_hat)
        late = u >= policy.pi
        if policy.pi < 1:
            v = (u[late] - policy.pi) / (1 - policy.pi)
            out[late] += -np.log(np.clip(v, 1e-300, None)) / policy.gamma
        return out
    if isinstance(policy, DiscreteGap):
        cdf = np.cumsum(policy.probs)
        idx = np.minimum(np.searchsorted(cdf, u * cdf[-1], side="right"), len(cdf) - 1)
        return np.asarray(policy.times)[idx]
    raise InvalidParams(f"unsupported policy {policy!r}")


def _flow(u: float, r: float, t0: np.ndarray, t1: np.ndarray) -> np.ndarray:
    return u * np.exp(-r * t0) * -np.expm1(-r * (t1 - t0)) / r


def _simulate_batch(policy: InspectionPolicy, strategy: ActionStrategy, params: ModelParams,
                    seeds: np.ndarray, horizon: float, analytic_tail: bool) -> dict:
    n = len(seeds)
    d = derive(params)
    r = params.r
    delta = math.inf if params.perfect else params.delta
    rho = params.rho
    segs = strategy.segments()
    work_only = isinstance(strategy, AlwaysWork) or all(a == 1 for _, _, a in segs)
    tail = analytic_tail and work_only
    K = policy_cost(policy, d) if tail else 0.0

    counter = np.zeros(n, dtype=np.uint64)
    cost = np.zeros(n)
    payoff = np.zeros(n)
    n_insp = np.zeros(n, dtype=np.int64)
    cause = np.full(n, ALIVE, dtype=np.int8)
    end_time = np.zeros(n)
    start = np.zeros(n)   # absolute time of the current cycle start
    dirty = np.zeros(n, dtype=bool)

    def draw(idx, stream):
        u = rng.uniforms(seeds[idx], stream, counter[idx])
        counter[idx] += np.uint64(1)
        return u

    active = np.arange(n)
    while active.size:
        if tail:
            done = start[active] >= horizon
            if done.any():
                idx = active[done]
                disc = np.exp(-r * start[idx])
                cost[idx] += disc * K
                payoff[idx] += disc * d.U1
                cause[idx] = CENSORED
                end_time[idx] = start[idx]
                active = active[~done]
                if not active.size:
                    break
        gap = _sample_gap(policy, draw(active, rng.STREAM_GAP))
        limit = gap if tail else np.minimum(gap, horizon - start[active])
        s = np.zeros(active.size)  # time since the cycle start
        alive = np.ones(active.size, dtype=bool)
        for seg_start, seg_end, act in segs:
            lam_g = params.lambda_g * act
            lam_b = params.lambda_b * (1 - act)
            up = 0.0 if act else delta  # clean -> dirty
            down = rho if act else 0.0  # dirty -> clean
            end = np.minimum(seg_end, limit)
            if math.isinf(up):
                # perfect detection: evidence appears the instant shirking starts
                dirty[active[alive & (s < end)]] = True
            while True:
                pending = np.flatnonzero(alive & (s < end))
                if not pending.size:
                    break
                idx = active[pending]
                flip = np.where(dirty[idx], down, up)
                rate = lam_g + lam_b + flip
                u_t = draw(idx, rng.STREAM_TIME)
                with np.errstate(divide="ignore"):
                    wait = np.where(rate > 0, -np.log(u_t) / np.where(rate > 0, rate, 1.0), np.inf)
                t_ev = s[pending] + wait
                hit = t_ev < end[pending]
                t_stop = np.where(hit, t_ev, end[pending])
                u_flow = d.u1 if act else d.u0
                payoff[idx] += _flow(u_flow, r, start[idx] + s[pending], start[idx] + t_stop)
                s[pending] = t_stop
                if hit.any():
                    h_pos = pending[hit]
                    h_idx = active[h_pos]
                    kind = draw(h_idx, rng.STREAM_KIND) * rate[hit]
                    g_hit = kind < lam_g
                    b_hit = ~g_hit & (kind < lam_g + lam_b)
                    f_hit = ~g_hit & ~b_hit
                    for mask, c in ((g_hit, BREAKTHROUGH), (b_hit, BREAKDOWN)):
                        if mask.any():
                            cause[h_idx[mask]] = c
                            end_time[h_idx[mask]] = start[h_idx[mask]] + s[h_pos[mask]]
                            alive[h_pos[mask]] = False
                    dirty[h_idx[f_hit]] = ~dirty[h_idx[f_hit]]
            if seg_end >= np.max(limit, initial=0.0):
                break
        # survivors reach the end of the gap or the horizon
        pos = np.flatnonzero(alive)
        idx = active[pos]
        reached = gap[pos] <= limit[pos]
        insp, cens = idx[reached], idx[~reached]
        t_insp = start[insp] + gap[pos][reached]
        cost[insp] += np.exp(-r * t_insp)
        n_insp[insp] += 1
        failed = dirty[insp]
        cause[insp[failed]] = FAILED
        end_time[insp[failed]] = t_insp[failed]
        start[insp] = t_insp
        cause[cens] = CENSORED
        end_time[cens] = start[cens] + limit[pos][~reached]
        active = active[cause[active] == ALIVE]
    return {"cost": cost, "payoff": payoff, "n_inspections": n_insp, "end_cause": cause,
            "end_time": end_time}


def simulate_run(policy: InspectionPolicy, strategy: ActionStrategy, params: ModelParams,
                 run_seed: int, horizon: Optional[float] = None, analytic_tail: bool = True) -> dict:
    """One trajectory; identical to the run with the same key inside :func:`estimate`."""
    h = default_horizon(params) if horizon is None else horizon
    out = _simulate_batch(policy, strategy, params, np.array([run_seed], dtype=np.uint64), h,
                          analytic_tail)
    return {"end_cause": END_CAUSES[int(out["end_cause"][0])],
            "end_time": float(out["end_time"][0]),
            "n_inspections": int(out["n_inspections"][0]),
            "disc_cost": float(out["cost"][0]),
            "disc_payoff": float(out["payoff"][0])}


def _chunk(args):
    policy, strategy, params, seed, lo, hi, horizon, tail = args
    seeds = rng.run_seed(seed, np.arange(lo, hi, dtype=np.uint64))
    return _simulate_batch(policy, strategy, params, seeds, horizon, tail)


def _mean_se(x: np.ndarray):
    n = len(x)
    mean = math.fsum(x) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((x - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)


def estimate(policy: InspectionPolicy, strategy: ActionStrategy, params: ModelParams,
             cfg: SimConfig = SimConfig(), keep_runs: bool = False) -> SimReport:
    """Monte Carlo estimates of the principal's cost and the agent's payoff."""
    horizon = default_horizon(params) if cfg.horizon is None else cfg.horizon
    n = int(cfg.n_runs)
    jobs = [(policy, strategy, params, cfg.seed, lo, min(lo + cfg.chunk, n), horizon, cfg.analytic_tail)
            for lo in range(0, n, cfg.chunk)]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            parts = list(ex.map(_chunk, jobs))
    else:
        parts = [_chunk(j) for j in jobs]
    runs = {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}
    mc, sc = _mean_se(runs["cost"])
    mp, sp = _mean_se(runs["payoff"])
    counts = np.bincount(runs["end_cause"].astype(np.int64), minlength=len(END_CAUSES))
    causes = {name: float(counts[i]) / n for i, name in enumerate(END_CAUSES)}
    return SimReport(n_runs=n, mean_cost=mc, se_cost=sc, mean_agent_payoff=mp, se_agent_payoff=sp,
                     end_causes=causes, n_inspections=float(runs["n_inspections"].sum()) / n,
                     runs=runs if keep_runs else None)
