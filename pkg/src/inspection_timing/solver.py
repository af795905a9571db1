"""Optimal inspection schedules: closed forms where they exist, bracketing
root finders on monotone maps otherwise."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

from .errors import Infeasible, InvalidParams, NonConvergence, WrongRegime
from .model import (PERFECT, DerivedParams, ModelParams, Regime, check_assumptions,
                    classify_regime, derive, nearly_equal)
from .payoffs import (policy_cost, u_shirk_work, u_shirk_work_shirk, u_shirk_work_shirk_terms,
                      u_shirk_work_terms)
from .policies import DelayedExponential, Exponential, InspectionPolicy, Periodic
from .roots import XTOL, bisect, expand_upper

log = logging.getLogger(__name__)

SHIRK_TO_END = "ShirkToEnd"
SHIRK_THEN_WORK = "ShirkThenWork"
WORK_THEN_SHIRK = "WorkThenShirk"
SHIRK_WORK_SHIRK = "ShirkWorkShirk"
LOCAL = "Local"


@dataclass(frozen=True)
class PolicySolution:
    regime: Regime
    policy: InspectionPolicy
    cost: float
    binding_deviation: str
    tau_star: Optional[float] = None
    t_bar: Optional[float] = None
    gamma_star: Optional[float] = None
    tau_hat: Optional[float] = None
    pi_star: Optional[float] = None
    lambda_bar_b: Optional[float] = None
    residuals: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"regime": self.regime.value, "policy": self.policy.to_dict(), "cost": self.cost,
               "binding_deviation": self.binding_deviation}
        for name in ("tau_star", "t_bar", "gamma_star", "tau_hat", "pi_star", "lambda_bar_b"):
            value = getattr(self, name)
            if value is not None:
                out[name] = "inf" if math.isinf(value) else value
        out["residuals"] = dict(self.residuals)
        return out


def _require_a1(params: ModelParams, d: DerivedParams):
    report = check_assumptions(params)
    if not report.a1_holds:
        raise Infeasible("U0 <= U1: the agent prefers working without inspections", report)
    return report


def _require_a2a(d: DerivedParams, delta: float, report=None):
    if not delta * d.U1 > d.lambda0 * (d.U0 - d.U1):
        raise Infeasible("detectability too low: no schedule can deter shirking", report)


# --- perfect inspections -------------------------------------------------------

def solve_perfect_innovation(d: DerivedParams) -> dict:
    """Periodic gap and the latest profitable shirk time when inspections are
    perfect and work prolongs the project (or is neutral)."""
    if d.lambda1 < d.lambda0 and not d.neutral:
        raise WrongRegime("periodic schedule requires lambda1 >= lambda0")
    if not d.U0 > d.U1:
        raise Infeasible("U0 <= U1")
    l0, l1 = d.lambda0, d.lambda1
    if d.U1 * l1 <= d.U0 * l0 or d.neutral:
        return {"tau_star": -math.log((d.U0 - d.U1) / d.U0) / l0, "t_bar": math.inf}
    ratio = (l1 - l0) / l1
    t_bar = -math.log(ratio) / l0
    log_e = math.log(ratio) + (l0 / l1) * math.log(l0 * (d.U0 - d.U1) / (d.U1 * (l1 - l0)))
    return {"tau_star": -log_e / l0, "t_bar": t_bar}


def solve_perfect_maintenance(d: DerivedParams) -> float:
    """Hazard of the memoryless schedule when inspections are perfect and
    shirking shortens the project."""
    if d.lambda0 <= d.lambda1 and not d.neutral:
        raise WrongRegime("exponential schedule requires lambda0 > lambda1")
    if not d.U0 > d.U1:
        raise Infeasible("U0 <= U1")
    return d.lambda0 * (d.U0 - d.U1) / d.U1


# --- imperfect inspections --------------------------------------------------------

def solve_tau_hat(d: DerivedParams, delta: float) -> float:
    """Length of the inspection-free window of the delayed exponential schedule."""
    if delta is PERFECT:
        raise WrongRegime("no inspection-free window with perfect inspections")
    if d.lambda0 <= d.lambda1:
        raise WrongRegime("the window is finite only when lambda0 > lambda1")
    return math.log1p(delta / (d.lambda0 - d.lambda1)) / delta


def solve_gamma_star_imperfect(d: DerivedParams, delta: float) -> float:
    """Hazard after the window that leaves the agent indifferent to shirking."""
    if d.lambda0 <= d.lambda1:
        raise WrongRegime("requires lambda0 > lambda1")
    denom = d.U1 * (d.lambda0 + delta) - d.U0 * d.lambda0
    if denom <= 0:
        raise Infeasible("detectability too low for an incentive-compatible hazard")
    return (d.U0 - d.U1) * d.lambda0 * (d.lambda0 + delta) / denom


def _sw_profile(tau: float, d: DerivedParams, delta: float, rho: float):
    """Best shirk-then-work deviation against Periodic(tau).

    Returns ``(violated, t_best, value_best)`` where ``violated`` says some
    positive shirk time beats the on-path value.
    """
    f = u_shirk_work_terms(tau, d, delta, rho)
    slope0 = f.derivative()(0.0)
    cands = [tau] + f.local_maxima(0.0, tau)
    best = max(cands, key=lambda t: (f(t), t))
    value = f(best)
    return value > d.U1 or slope0 > 0, best, value, slope0


def solve_tau_star_imperfect(d: DerivedParams, delta: float, rho: float = 0.0) -> dict:
    """Longest periodic gap at which no shirk-then-work plan beats working."""
    if delta is PERFECT:
        raise WrongRegime("use solve_perfect_innovation for perfect inspections")
    if not d.U0 > d.U1:
        raise Infeasible("U0 <= U1")
    _require_a2a(d, delta)
    pred = lambda tau: _sw_profile(tau, d, delta, rho)[0]
    lo = 1e-9
    if pred(lo):
        raise NonConvergence("incentives fail even at a vanishing gap")
    hi = expand_upper(pred, max(1.0 / d.lambda0, 2 * lo))
    lo, hi = bisect(pred, lo, hi, xtol=XTOL)
    tau = lo
    _, t_best, value, slope0 = _sw_profile(tau, d, delta, rho)
    if abs(value - d.U1) <= 1e-8 or t_best > 0:
        t_bar = t_best
    else:
        t_bar = 0.0
    return {"tau_star": tau, "t_bar": t_bar, "residual": value - d.U1, "slope_at_zero": slope0}


def _lambda_bar_gap(lambda0: float, lambda1: float, delta: float, u0: float, U1: float) -> float:
    d = DerivedParams(lambda0=lambda0, lambda1=lambda1, U0=u0 / lambda0, U1=U1,
                      mu=(u0 / lambda0 - U1) / (u0 / lambda0), lambda_ratio=lambda1 / lambda0,
                      u0=u0, u1=U1 * lambda1)
    th = solve_tau_hat(d, delta)
    return u_shirk_work(th, th, d, delta) - U1


def solve_lambda_bar_b(lambda_g: float, r: float, delta: float, u0: float, u1: float) -> float:
    """Breakdown rate above which the delayed exponential schedule beats
    periodic inspection.

    The flow utilities ``u0, u1`` are held fixed as the breakdown rate varies,
    so ``U0 = u0 / (lambda_b + r)`` moves with it.
    """
    if delta is PERFECT:
        raise WrongRegime("the cutoff is defined for imperfect inspections")
    lambda1 = lambda_g + r
    U1 = u1 / lambda1
    hi = u0 / U1  # U0 = U1 here: shirking is never attractive beyond this rate
    if hi <= lambda1:
        raise Infeasible("U0 <= U1 at every breakdown rate above lambda_g")
    gap = lambda l0: _lambda_bar_gap(l0, lambda1, delta, u0, U1)
    eps = 1e-6
    lo = lambda1 * (1 + eps)
    while gap(lo) <= 0:
        eps *= 1e-2
        if eps < 1e-15:
            raise NonConvergence("no sign change just above lambda_g")
        lo = lambda1 * (1 + eps)
    if gap(hi) > 0:
        raise NonConvergence("no sign change below the U0 = U1 boundary")
    a, b = bisect(lambda l0: gap(l0) <= 0, lo, hi)
    return 0.5 * (a + b) - r


def _sws_profile(pi: float, tau_hat: float, gamma: float, d: DerivedParams, delta: float, rho: float):
    f = u_shirk_work_shirk_terms(tau_hat, pi, gamma, d, delta, rho)
    slope0 = f.derivative()(0.0)
    cands = [tau_hat] + f.local_maxima(0.0, tau_hat)
    best = max(cands, key=lambda t: (f(t), t))
    value = f(best)
    return value > d.U1 or slope0 > 0, best, value


def solve_pi_star(d: DerivedParams, delta: float, rho: float = 0.0) -> float:
    """Smallest inspection probability at the end of the window that keeps
    every shirk-work-shirk plan unprofitable."""
    tau_hat = solve_tau_hat(d, delta)
    gamma = solve_gamma_star_imperfect(d, delta)
    pred = lambda pi: not _sws_profile(pi, tau_hat, gamma, d, delta, rho)[0]
    if not pred(1.0):
        raise WrongRegime("periodic inspection at the window end is not incentive compatible; "
                          "breakdown rate is below the cutoff")
    if pred(0.0):
        return 0.0
    lo, hi = bisect(pred, 0.0, 1.0, xtol=1e-15)
    return hi


def pi_star_linear(d: DerivedParams, delta: float, rho: float = 0.0) -> float:
    """Probability that makes shirking through the whole window exactly as
    good as working (the payoff is linear in the probability)."""
    tau_hat = solve_tau_hat(d, delta)
    gamma = solve_gamma_star_imperfect(d, delta)
    v0 = u_shirk_work_shirk(tau_hat, tau_hat, 0.0, gamma, d, delta, rho)
    v1 = u_shirk_work_shirk(tau_hat, tau_hat, 1.0, gamma, d, delta, rho)
    return (v0 - d.U1) / (v0 - v1)


# --- recovery -------------------------------------------------------------------------

def solve_recovery_exponential(params: ModelParams) -> float:
    """Memoryless hazard that is optimal when evidence recovers quickly."""
    if params.perfect:
        raise WrongRegime("recovery requires imperfect inspections")
    if params.rho + params.lambda_g < params.delta + params.lambda_b:
        raise WrongRegime("recovery too slow for the memoryless schedule")
    d = derive(params)
    denom = d.U1 * (d.lambda0 + params.delta) - d.U0 * d.lambda0
    if denom <= 0:
        raise Infeasible("detectability too low", check_assumptions(params))
    return d.lambda0 * (d.lambda1 + params.rho) * (d.U0 - d.U1) / denom


def recovery_robustness(params: ModelParams, tau_star: Optional[float] = None) -> dict:
    """Signed margins of the sufficient conditions under which the no-recovery
    schedule stays optimal with recovery rate ``params.rho``."""
    if params.perfect:
        raise WrongRegime("recovery margins need a finite detectability rate")
    d = derive(params)
    rho, delta = params.rho, params.delta
    if tau_star is None:
        tau_star = solve_tau_star_imperfect(d, delta, 0.0)["tau_star"]
    margins = {
        "rate": delta + d.lambda0 - 2 * d.lambda1 - 2 * rho,
        "level": d.U0 * d.lambda0 - d.lambda1 * d.U1
                 - (rho * d.U1 + math.exp(-delta * tau_star) * (d.lambda0 + delta - d.lambda1 - rho) * d.U1),
        "hazard": (d.lambda0 * (d.U0 - d.U1) / d.U1 - rho) if d.lambda0 > d.lambda1 else None,
    }
    margins["all_hold"] = all(v is None or v > 0 for v in margins.values())
    margins["tau_star"] = tau_star
    return margins


# --- dispatch ------------------------------------------------------------------------

def _perfect_solution(params: ModelParams, d: DerivedParams) -> PolicySolution:
    regime = classify_regime(params)
    if regime is Regime.MAINTENANCE:
        gamma = solve_perfect_maintenance(d)
        policy = Exponential(gamma)
        return PolicySolution(regime, policy, policy_cost(policy, d), WORK_THEN_SHIRK,
                              gamma_star=gamma,
                              residuals={"hazard": gamma / d.lambda0 - (d.U0 - d.U1) / d.U1})
    res = solve_perfect_innovation(d)
    policy = Periodic(res["tau_star"])
    kinked = math.isfinite(res["t_bar"])
    tau = res["tau_star"]
    t_eval = res["t_bar"] if kinked else tau
    residual = u_shirk_work(t_eval, tau, d, PERFECT) - d.U1
    return PolicySolution(regime, policy, policy_cost(policy, d),
                          SHIRK_THEN_WORK if kinked else SHIRK_TO_END,
                          tau_star=tau, t_bar=res["t_bar"], residuals={"shirk_then_work": residual})


def _imperfect_solution(params: ModelParams, d: DerivedParams, rho: float = 0.0) -> PolicySolution:
    delta = params.delta
    regime = classify_regime(params)
    lambda_bar_b = None
    delayed = False
    if d.lambda0 > d.lambda1 and not d.neutral:
        try:
            lambda_bar_b = solve_lambda_bar_b(params.lambda_g, params.r, delta, params.u0, params.u1)
            delayed = params.lambda_b > lambda_bar_b
        except NonConvergence as exc:
            log.warning("cutoff search failed (%s); deciding by the window-end payoff", exc)
            th = solve_tau_hat(d, delta)
            delayed = u_shirk_work(th, th, d, delta) <= d.U1
    if delayed:
        try:
            return _delayed_solution(params, d, regime, lambda_bar_b, rho)
        except WrongRegime:
            # only reachable within bisection tolerance of the cutoff
            log.info("cutoff within tolerance; using the periodic schedule")
    res = solve_tau_star_imperfect(d, delta, rho)
    policy = Periodic(res["tau_star"])
    if res["t_bar"] >= res["tau_star"]:
        label = SHIRK_TO_END
    elif res["t_bar"] > 0:
        label = SHIRK_THEN_WORK
    else:
        label = LOCAL
    return PolicySolution(regime, policy, policy_cost(policy, d), label,
                          tau_star=res["tau_star"], t_bar=res["t_bar"], lambda_bar_b=lambda_bar_b,
                          residuals={"shirk_then_work": res["residual"]})


def _delayed_solution(params, d, regime, lambda_bar_b, rho) -> PolicySolution:
    delta = params.delta
    tau_hat = solve_tau_hat(d, delta)
    gamma = solve_gamma_star_imperfect(d, delta)
    pi = solve_pi_star(d, delta, rho)
    policy = DelayedExponential(tau_hat, pi, gamma)
    window = math.exp(-delta * tau_hat) - (d.lambda0 - d.lambda1) / (d.lambda0 - d.lambda1 + delta)
    hazard = gamma * (d.U1 * (d.lambda0 + delta) - d.U0 * d.lambda0) \
        - (d.U0 - d.U1) * d.lambda0 * (d.lambda0 + delta)
    return PolicySolution(
        regime, policy, policy_cost(policy, d), SHIRK_WORK_SHIRK,
        gamma_star=gamma, tau_hat=tau_hat, pi_star=pi, lambda_bar_b=lambda_bar_b,
        residuals={
            "window": window,
            "hazard": hazard,
            "shirk_work_shirk_start": u_shirk_work_shirk(0.0, tau_hat, pi, gamma, d, delta, rho) - d.U1,
            "shirk_work_shirk_end": u_shirk_work_shirk(tau_hat, tau_hat, pi, gamma, d, delta, rho) - d.U1,
        })


def solve_optimal(params: ModelParams) -> PolicySolution:
    """Cheapest renewal schedule under which working is a best response."""
    if not isinstance(params, ModelParams):
        raise InvalidParams("expected ModelParams")
    d = derive(params)
    report = _require_a1(params, d)
    if params.perfect:
        if params.rho > 0:
            raise WrongRegime("recovery is only modelled for imperfect inspections")
        return _perfect_solution(params, d)
    if not report.a2a_holds:
        raise Infeasible("detectability too low: no schedule can deter shirking", report)
    if params.rho == 0:
        return _imperfect_solution(params, d)
    regime = classify_regime(params)
    if params.rho + params.lambda_g >= params.delta + params.lambda_b:
        gamma = solve_recovery_exponential(params)
        policy = Exponential(gamma)
        return PolicySolution(regime, policy, policy_cost(policy, d), LOCAL, gamma_star=gamma)
    margins = recovery_robustness(params)
    if not margins["all_hold"]:
        raise WrongRegime(f"recovery rate outside the covered regimes: {margins}")
    sol = _imperfect_solution(params.with_(rho=0.0), d)
    residuals = dict(sol.residuals)
    residuals["robustness"] = {k: v for k, v in margins.items() if k != "all_hold"}
    return PolicySolution(**{**sol.__dict__, "residuals": residuals})
