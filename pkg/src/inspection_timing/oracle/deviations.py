"""Best deviation within a one- or two-parameter family of action plans."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from ..errors import InvalidParams
from ..model import ModelParams, derive
from ..payoffs import (expected_payoff, u_shirk_work, u_shirk_work_shirk_terms, u_shirk_work_terms,
                       u_work_shirk)
from ..policies import (ALWAYS_SHIRK, ActionStrategy, DelayedExponential, DiscreteGap,
                        InspectionPolicy, Periodic, ShirkThenWork, ShirkWorkShirk, WorkThenShirk)
from ..roots import ExpSum

FAMILIES = ("ShirkThenWork", "WorkThenShirk", "ShirkWorkShirk", "ShirkToEnd")


@dataclass
class DeviationResult:
    family: str
    max_payoff: float
    argmax: ActionStrategy
    argmax_time: float
    times: np.ndarray
    payoffs: np.ndarray

    def to_dict(self) -> dict:
        return {"family": self.family, "max_payoff": self.max_payoff,
                "argmax_time": self.argmax_time}


def _scan_horizon(policy: InspectionPolicy, params: ModelParams) -> float:
    d = derive(params)
    tail = 10.0 / min(d.lambda0, d.lambda1)
    if isinstance(policy, Periodic):
        return policy.tau
    if isinstance(policy, DelayedExponential):
        return policy.tau_hat + (0.0 if policy.pi == 1 else tail)
    if isinstance(policy, DiscreteGap):
        return policy.times[-1]
    return tail


def _exact_best(f: ExpSum, lo: float, hi: float, at_lo: float) -> tuple:
    """Best point of ``f`` on ``(lo, hi]`` versus the value ``at_lo`` at ``lo``.

    Near-ties go to the later switch time so that a binding interior
    deviation is reported rather than the on-path plan.
    """
    cands = [hi] + [c for c in f.derivative().roots(lo, hi) if lo < c < hi]
    vals = [(f(c), c) for c in cands] + [(at_lo, lo)]
    top = max(v for v, _ in vals)
    near = [(v, c) for v, c in vals if v >= top - 1e-12]
    v, c = max(near, key=lambda vc: (vc[1] > lo, vc[0], vc[1]))
    return c, v


def best_deviation_scan(policy: InspectionPolicy, params: ModelParams, family: str,
                        n_grid: int = 201, horizon: Optional[float] = None) -> DeviationResult:
    """Maximize the expected payoff of ``family`` against ``policy`` over its
    switch time.

    Against a periodic schedule (and for shirk-work-shirk against a delayed
    exponential one) the payoff is a sum of exponentials and its maximum is
    found exactly from the critical points; otherwise the profile on a grid is
    refined by a bounded scalar search around the best grid cell.
    """
    if family not in FAMILIES:
        raise InvalidParams(f"family must be one of {FAMILIES}")
    d = derive(params)
    delta, rho = params.delta, params.rho
    H = _scan_horizon(policy, params) if horizon is None else horizon

    if family == "ShirkToEnd":
        v = expected_payoff(ALWAYS_SHIRK, policy, params)
        return DeviationResult(family, v, ALWAYS_SHIRK, math.inf, np.array([math.inf]), np.array([v]))

    if family == "ShirkWorkShirk":
        if not isinstance(policy, DelayedExponential):
            raise InvalidParams("ShirkWorkShirk deviations resume shirking at the end of the "
                                "inspection-free window of a delayed exponential policy")
        th = policy.tau_hat
        times = np.linspace(0.0, th, n_grid)
        make = lambda t: ShirkWorkShirk(float(t), th)
        payoff = lambda t: expected_payoff(make(t), policy, params)
        vals = np.array([payoff(t) for t in times])
        if not params.perfect and th > 0:
            f = u_shirk_work_shirk_terms(th, policy.pi, policy.gamma, d, delta, rho)
            t_best, v_best = _exact_best(f, 0.0, th, f(0.0))
            return DeviationResult(family, v_best, make(t_best), t_best, times, vals)
        return _refine(family, make, payoff, times, vals)

    if family == "ShirkThenWork":
        make = lambda t: ShirkThenWork(float(t))
        if isinstance(policy, Periodic):
            tau = policy.tau
            times = np.linspace(0.0, tau, n_grid)
            vals = np.array([u_shirk_work(t, tau, d, delta, rho) for t in times])
            if params.perfect:
                # the jump at t = 0: any positive shirk leaves evidence
                E = math.exp(-d.lambda1 * tau)
                f = ExpSum.of([(d.U0, 0.0), (d.U1 - d.U0, -d.lambda0),
                               (-d.U1 * E, d.lambda1 - d.lambda0)])
            else:
                f = u_shirk_work_terms(tau, d, delta, rho)
            t_best, v_best = _exact_best(f, 0.0, tau, d.U1)
            return DeviationResult(family, v_best, make(t_best), t_best, times, vals)
        times = np.linspace(0.0, H, n_grid)
        payoff = lambda t: expected_payoff(make(t), policy, params)
        return _refine(family, make, payoff, times, np.array([payoff(t) for t in times]))

    # WorkThenShirk
    make = lambda t: WorkThenShirk(float(t))
    if isinstance(policy, Periodic):
        tau = policy.tau
        times = np.linspace(0.0, tau, n_grid)
        payoff = lambda t: u_work_shirk(t, tau, d, delta)
    else:
        times = np.linspace(0.0, H, n_grid)
        payoff = lambda t: expected_payoff(make(t), policy, params)
    return _refine(family, make, payoff, times, np.array([payoff(t) for t in times]))


def _refine(family, make, payoff, times, vals) -> DeviationResult:
    i = int(np.argmax(vals))
    t_best, v_best = float(times[i]), float(vals[i])
    lo = times[max(i - 1, 0)]
    hi = times[min(i + 1, len(times) - 1)]
    if hi > lo:
        res = minimize_scalar(lambda t: -payoff(t), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        if -res.fun > v_best:
            t_best, v_best = float(res.x), float(-res.fun)
    return DeviationResult(family, v_best, make(t_best), t_best, times, vals)
