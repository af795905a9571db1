"""Closed-form agent payoffs, losses, passage probabilities and policy costs.

Every function here is an exact piecewise-exponential evaluation; nothing is
integrated numerically.  The generic :func:`expected_payoff` engine handles any
step strategy against any renewal policy and is what the special-purpose
formulas are tested against.
"""

from __future__ import annotations

import math
from typing import Optional

from .errors import DivergentCost, InvalidParams
from .model import PERFECT, Delta, DerivedParams, ModelParams, derive
from .policies import (ActionStrategy, DelayedExponential, Exponential, InspectionPolicy,
                       Periodic, ShirkThenWork)
from .roots import ExpSum


def _rate(delta: Delta) -> float:
    return math.inf if delta is PERFECT else float(delta)


def _int_exp(k: float, length: float) -> float:
    """Integral of exp(-k s) over [0, length]."""
    if math.isinf(k):
        return 0.0
    if math.isinf(length):
        if k <= 0:
            raise DivergentCost("non-decaying integrand on an infinite interval")
        return 1.0 / k
    if abs(k * length) < 1e-14:
        return length
    return -math.expm1(-k * length) / k


def _decay(rate: float, length: float) -> float:
    if length == 0:
        return 1.0
    return math.exp(-rate * length)


# --- discounting and passage ---------------------------------------------------

def effective_discount(strategy: ActionStrategy, t: float, d: DerivedParams) -> float:
    """Discount factor times project survival after following ``strategy`` to ``t``."""
    if t < 0:
        raise InvalidParams("t must be >= 0")
    exponent = 0.0
    for start, end, a in strategy.segments():
        if start >= t:
            break
        exponent += (d.lambda1 if a else d.lambda0) * (min(end, t) - start)
    return math.exp(-exponent)


def passage_probability(strategy: ActionStrategy, t: float, delta: Delta, rho: float = 0.0) -> float:
    """Probability that no evidence of shirking is present at time ``t``."""
    if t < 0:
        raise InvalidParams("t must be >= 0")
    down = _rate(delta)
    p = 1.0
    for start, end, a in strategy.segments():
        if start >= t:
            break
        length = min(end, t) - start
        if length <= 0:
            continue
        if a == 0:
            p *= _decay(down, length)
        elif rho > 0:
            p = 1.0 - (1.0 - p) * math.exp(-rho * length)
    return p


# --- deviation payoffs against a periodic schedule ---------------------------

def _fail_fraction(t: float, delta: Delta) -> float:
    """1 - exp(-delta t), the chance that shirking for ``t`` left evidence."""
    if t <= 0:
        return 0.0
    return 1.0 if delta is PERFECT else -math.expm1(-delta * t)


def u_shirk_work(t: float, tau: float, d: DerivedParams, delta: Delta, rho: float = 0.0) -> float:
    """Payoff from shirking on ``[0, t)`` and working until an inspection at ``tau``.

    ``t`` beyond ``tau`` is clamped: the agent has shirked the whole gap.
    """
    if t < 0 or tau < 0:
        raise InvalidParams("t and tau must be >= 0")
    t = min(t, tau)
    U0, U1 = d.U0, d.U1
    e0 = math.exp(-d.lambda0 * t)
    stay = math.exp(-(d.lambda1 + rho) * (tau - t))
    return U0 - (U0 - U1) * e0 - U1 * e0 * stay * _fail_fraction(t, delta)


def u_shirk_work_terms(tau: float, d: DerivedParams, delta: float, rho: float = 0.0) -> ExpSum:
    """``t -> u_shirk_work(t, tau)`` on ``[0, tau]`` as a sum of exponentials (finite delta)."""
    A = d.U1 * math.exp(-(d.lambda1 + rho) * tau)
    k = d.lambda1 + rho - d.lambda0
    return ExpSum.of([(d.U0, 0.0), (-(d.U0 - d.U1), -d.lambda0), (-A, k), (A, k - delta)])


def u_work_shirk(t: float, tau: float, d: DerivedParams, delta: Delta) -> float:
    """Payoff from working on ``[0, t)`` and shirking until an inspection at ``tau``."""
    if t < 0 or tau < 0:
        raise InvalidParams("t and tau must be >= 0")
    if t >= tau:
        return d.U1
    s = tau - t
    caught = 1.0 if delta is PERFECT else -math.expm1(-(d.lambda0 + delta) * s)
    h = d.U0 * -math.expm1(-d.lambda0 * s) - d.U1 * caught
    return d.U1 + math.exp(-d.lambda1 * t) * h


# --- delayed exponential schedule -----------------------------------------------

def shirk_forever_value(q: float, gamma: float, d: DerivedParams, delta: Delta) -> float:
    """Value of shirking throughout a memoryless inspection phase with hazard
    ``gamma``, starting from passage probability ``q``.

    At the incentive-compatible hazard this is the linear value
    ``U1 + (q - 1)(U0 - U1) lambda0 / delta``.
    """
    base = d.u0 / (d.lambda0 + gamma)
    if delta is PERFECT:
        return base
    return base + gamma * q * d.U1 / (d.lambda0 + gamma + delta)


def _passage_after_shirk(t: float, tau_hat: float, delta: Delta, rho: float) -> float:
    fail = _fail_fraction(t, delta)
    if rho > 0:
        fail *= math.exp(-rho * (tau_hat - t))
    return 1.0 - fail


def u_shirk_work_shirk(t: float, tau_hat: float, pi: float, gamma: float,
                       d: DerivedParams, delta: Delta, rho: float = 0.0) -> float:
    """Shirk on ``[0, t)``, work until ``tau_hat``, then shirk for good.

    The policy is the delayed exponential one: no inspection before
    ``tau_hat``, an inspection there with probability ``pi``, hazard ``gamma``
    afterwards.
    """
    if not 0 <= t <= tau_hat:
        raise InvalidParams("need 0 <= t <= tau_hat")
    U0, U1 = d.U0, d.U1
    e0 = math.exp(-d.lambda0 * t)
    e1 = math.exp(-d.lambda1 * (tau_hat - t))
    q = _passage_after_shirk(t, tau_hat, delta, rho)
    tail = pi * U1 * q + (1 - pi) * shirk_forever_value(q, gamma, d, delta)
    return U0 * -math.expm1(-d.lambda0 * t) + e0 * U1 * (1 - e1) + e0 * e1 * tail


def u_shirk_work_shirk_terms(tau_hat: float, pi: float, gamma: float, d: DerivedParams,
                             delta: float, rho: float = 0.0) -> ExpSum:
    """``t -> u_shirk_work_shirk(t, ...)`` on ``[0, tau_hat]`` as a sum of exponentials."""
    U0, U1 = d.U0, d.U1
    l0, l1 = d.lambda0, d.lambda1
    # tail(q) = a + b q with q = 1 - c(t)
    a = (1 - pi) * d.u0 / (l0 + gamma)
    b = pi * U1 + (1 - pi) * gamma * U1 / (l0 + gamma + delta)
    E = math.exp(-l1 * tau_hat)
    k = l1 - l0  # exp(-l0 t) * exp(-l1 (tau_hat - t)) = E * exp(k t)
    terms = [(U0, 0.0), (U1 - U0, -l0), (-U1 * E, k), ((a + b) * E, k)]
    # q = 1 - (1 - exp(-delta t)) * R(t) with R = exp(-rho (tau_hat - t))
    R0 = math.exp(-rho * tau_hat)
    terms += [(-b * E * R0, k + rho), (b * E * R0, k + rho - delta)]
    return ExpSum.of(terms)


# --- losses -----------------------------------------------------------------------

def loss_shirk(t: float, d: DerivedParams, delta: Delta) -> float:
    """Loss relative to ``U0`` from shirking until an inspection at ``t``."""
    if t < 0:
        raise InvalidParams("t must be >= 0")
    e0 = math.exp(-d.lambda0 * t)
    if delta is PERFECT:
        return d.U0 * e0 if t > 0 else d.U0 - d.U1
    return e0 * (d.U0 - d.U1 * math.exp(-delta * t))


def loss_shirk_x(x: float, d: DerivedParams, delta: Delta) -> float:
    """:func:`loss_shirk` in terms of the cost weight ``x = exp(-lambda1 t)``."""
    if not 0 < x <= 1:
        raise InvalidParams("x must lie in (0, 1]")
    return loss_shirk(-math.log(x) / d.lambda1, d, delta)


# --- principal costs -------------------------------------------------------------

def policy_cost(policy: InspectionPolicy, d: DerivedParams) -> float:
    """Expected discounted number of inspections, ``K = x / (1 - x)``."""
    if isinstance(policy, Exponential):
        return policy.gamma / d.lambda1
    x = policy.laplace(d.lambda1)
    if x >= 1:
        raise DivergentCost(f"E exp(-lambda1 T) = {x} >= 1")
    return x / (1 - x)


def cost_ratio(mu: float, lambda_ratio: float) -> float:
    """Cost of the best exponential schedule over the best periodic one.

    Both schedules make the agent just indifferent to shirking until the next
    inspection when ``(U0 - U1)/U0 = mu`` and ``lambda1/lambda0 = lambda_ratio``.
    """
    if not 0 < mu < 1:
        raise InvalidParams("mu must lie in (0, 1)")
    if not lambda_ratio > 0:
        raise InvalidParams("lambda_ratio must be > 0")
    # normalize lambda0 = 1 and U0 = 1; the ratio does not depend on the scale
    d = DerivedParams(lambda0=1.0, lambda1=lambda_ratio, U0=1.0, U1=1.0 - mu, mu=mu,
                      lambda_ratio=lambda_ratio, u0=1.0, u1=(1.0 - mu) * lambda_ratio)
    periodic = Periodic(-math.log(mu))
    exponential = Exponential(mu / (1.0 - mu))
    return policy_cost(exponential, d) / policy_cost(periodic, d)


# --- generic engine ---------------------------------------------------------------

def expected_payoff(strategy: ActionStrategy, policy: InspectionPolicy, params: ModelParams,
                    continuation: Optional[float] = None) -> float:
    """Expected payoff over one inspection gap.

    The agent follows ``strategy`` from the last passed inspection; a passed
    inspection is worth ``continuation`` (``U1`` by default, the on-path
    value) and a failed one is worth nothing.
    """
    d = derive(params)
    W = d.U1 if continuation is None else float(continuation)
    down = _rate(params.delta)
    rho = params.rho
    pieces, atoms = policy.structure()
    end_all = pieces[-1].end if pieces else max(t for t, _ in atoms)
    segs = strategy.segments()

    cuts = {0.0}
    for start, end, _ in segs:
        cuts.update(x for x in (start, end) if math.isfinite(x))
    for p in pieces:
        cuts.update(x for x in (p.start, p.end) if math.isfinite(x))
    cuts.update(t for t, _ in atoms)
    cuts = sorted(c for c in cuts if c <= end_all)
    atom_mass = {}
    for t, m in atoms:
        atom_mass[t] = atom_mass.get(t, 0.0) + m

    total = []
    D, p = 1.0, 1.0
    seg_i = 0
    for i, a_t in enumerate(cuts):
        if a_t in atom_mass:
            total.append(atom_mass[a_t] * D * p * W)
        if a_t >= end_all:
            break
        b_t = cuts[i + 1] if i + 1 < len(cuts) else math.inf
        piece = next(pc for pc in pieces if pc.start <= a_t < pc.end)
        while segs[seg_i][1] <= a_t:
            seg_i += 1
        act = segs[seg_i][2]
        lam, u = (d.lambda1, d.u1) if act else (d.lambda0, d.u0)
        h = piece.hazard
        S = piece.s_start * _decay(h, a_t - piece.start)
        L = b_t - a_t
        k = h + lam
        total.append(S * D * u * _int_exp(k, L))
        if h > 0:
            if act == 0:
                total.append(h * S * D * W * p * _int_exp(k + down, L))
            else:
                total.append(h * S * D * W * (_int_exp(k, L) - (1 - p) * _int_exp(k + rho, L)))
        if math.isinf(L):
            break
        D *= math.exp(-lam * L)
        if act == 0:
            p *= _decay(down, L)
        elif rho > 0:
            p = 1.0 - (1.0 - p) * math.exp(-rho * L)
    return math.fsum(total)


def shirk_to_end_payoff(tau: float, d: DerivedParams, delta: Delta) -> float:
    """Shirking until a periodic inspection at ``tau``: ``u_shirk_work(tau, tau)``."""
    return u_shirk_work(tau, tau, d, delta)


__all__ = [
    "effective_discount", "passage_probability", "u_shirk_work", "u_work_shirk",
    "u_shirk_work_shirk", "shirk_forever_value", "loss_shirk", "loss_shirk_x",
    "policy_cost", "cost_ratio", "expected_payoff", "shirk_to_end_payoff",
    "u_shirk_work_terms", "u_shirk_work_shirk_terms",
]
