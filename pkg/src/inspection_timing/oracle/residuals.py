"""Residual checks: binding constraints, fixed-point lemmas and HJB equations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad

from ..errors import InvalidParams, PreconditionViolated
from ..model import PERFECT, DerivedParams, ModelParams, derive
from ..policies import DelayedExponential, Exponential, InspectionPolicy


@dataclass
class ResidualReport:
    check: str
    grid: np.ndarray
    max_residual: float
    argmax_location: float
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        g = np.asarray(self.grid, dtype=float)
        out = {"check": self.check,
               "grid": {"min": float(g.min()), "max": float(g.max()), "n": int(g.size)},
               "max_residual": float(self.max_residual),
               "argmax_location": float(self.argmax_location)}
        out.update(self.extra)
        return out


def _report(check, grid, resid, **extra) -> ResidualReport:
    resid = np.abs(np.asarray(resid, dtype=float))
    i = int(np.argmax(resid))
    return ResidualReport(check, np.asarray(grid, dtype=float), float(resid[i]), float(grid[i]), extra)


# --- binding constraints ------------------------------------------------------------

def verify_binding_constraints(policy: InspectionPolicy, params: ModelParams,
                               grid: Optional[Sequence[float]] = None, n: int = 1001) -> dict:
    """Check that shirking until the next inspection is exactly as good as
    working, at the start of the gap and (for memoryless phases) at every
    later time.

    For ``t`` in the memoryless phase the condition reads
    ``[U0 E(e^{-l0 (T-t)}; T>t) - U1 E(e^{-(l0+delta)(T-t)}; T>t)] / (U0-U1) = P(T > t)``,
    with the second term absent for perfect inspections.
    """
    if not isinstance(policy, (Exponential, DelayedExponential)):
        raise InvalidParams("binding constraints are defined for (delayed) exponential policies")
    d = derive(params)
    start = policy.tau_hat if isinstance(policy, DelayedExponential) else 0.0
    if grid is None:
        grid = start + np.linspace(0.0, 10.0, n)
    grid = np.asarray(grid, dtype=float)

    def lhs(t):
        val = d.U0 * policy.laplace_tail(d.lambda0, t)
        if not params.perfect:
            val -= d.U1 * policy.laplace_tail(d.lambda0 + params.delta, t)
        return val / (d.U0 - d.U1)

    tail = np.array([lhs(t) - policy.survival(t) for t in grid])
    reports = {"tail": _report("binding_tail", grid, tail)}
    if isinstance(policy, DelayedExponential):
        reports["start"] = _report("binding_start", np.array([0.0]), [lhs(0.0) - 1.0])
    reports["max_residual"] = max(r.max_residual for r in reports.values() if isinstance(r, ResidualReport))
    return reports


# --- fixed-point lemmas ----------------------------------------------------------------

def fixed_point_gamma(kind: str, A: float, alpha: float, B: Optional[float] = None,
                      beta: Optional[float] = None) -> float:
    if kind == "single":
        if not (A > 1 and alpha > 0):
            raise PreconditionViolated("single-exponential lemma needs A > 1 and alpha > 0")
        return alpha / (A - 1)
    if kind == "sum":
        if B is None or beta is None:
            raise PreconditionViolated("sum-of-exponentials lemma needs B and beta")
        if min(A, B, alpha, beta) <= 0:
            raise PreconditionViolated("A, B, alpha, beta must be positive")
        if abs(A - B - 1) > 1e-12:
            raise PreconditionViolated("need A - B = 1")
        if not beta * B > alpha * A:
            raise PreconditionViolated("need beta B > alpha A")
        return alpha * beta / (beta * B - alpha * A)
    raise InvalidParams("kind must be 'single' or 'sum'")


def verify_fixed_point(kind: str, A: float, alpha: float, pi: float = 0.0,
                       gamma_candidate: Optional[float] = None, B: Optional[float] = None,
                       beta: Optional[float] = None,
                       grid: Optional[Sequence[float]] = None) -> ResidualReport:
    """Residual of the binding equation for ``F(t) = pi + (1-pi)(1-e^{-gamma t})``.

    The integrals over ``(t, inf)`` are computed by adaptive quadrature so the
    check does not reuse the algebra that produced ``gamma``.
    """
    gamma_lemma = fixed_point_gamma(kind, A, alpha, B, beta)
    if not 0 <= pi < 1:
        raise PreconditionViolated("pi must lie in [0, 1)")
    gamma = gamma_lemma if gamma_candidate is None else float(gamma_candidate)
    if grid is None:
        grid = np.linspace(0.0, 10.0, 101)
    grid = np.asarray(grid, dtype=float)

    def density_shifted(u, t):
        return (1 - pi) * gamma * math.exp(-gamma * (t + u))

    resid = []
    for t in grid:
        if kind == "single":
            val, _ = quad(lambda u: A * math.exp(-alpha * u) * density_shifted(u, t), 0, math.inf,
                          epsabs=1e-14, epsrel=1e-13, limit=200)
            resid.append(val - (1 - pi) * math.exp(-gamma * t))
        else:
            kern = lambda u: A * -math.expm1(-alpha * u) - B * -math.expm1(-beta * u)
            val, _ = quad(lambda u: kern(u) * density_shifted(u, t), 0, math.inf,
                          epsabs=1e-14, epsrel=1e-13, limit=200)
            resid.append(val)
    return _report(f"fixed_point_{kind}", grid, resid, gamma=gamma, gamma_lemma=gamma_lemma)


# --- HJB --------------------------------------------------------------------------------

def linear_value(q, d: DerivedParams, delta: float):
    """Conjectured value ``U1 + (q - 1)(U0 - U1) lambda0 / delta`` and its slope."""
    slope = (d.U0 - d.U1) * d.lambda0 / delta
    return d.U1 + (np.asarray(q) - 1) * slope, slope


def verify_hjb(params: ModelParams, gamma: float, rho: Optional[float] = None,
               q_grid: Optional[Sequence[float]] = None) -> ResidualReport:
    """Plug the linear value into the HJB equation of the memoryless phase.

    Reports ``max_q |max_a H_a(q)|`` and which action attains the maximum for
    ``q < 1``.
    """
    if params.perfect:
        raise InvalidParams("the HJB check needs a finite detectability rate")
    if not gamma > 0:
        raise InvalidParams("gamma must be > 0")
    d = derive(params)
    rho = params.rho if rho is None else rho
    delta = params.delta
    q = np.linspace(0.0, 1.0, 201) if q_grid is None else np.asarray(q_grid, dtype=float)
    V, dV = linear_value(q, d, delta)
    H = []
    for a, (u, lam) in enumerate(((d.u0, d.lambda0), (d.u1, d.lambda1))):
        drift = (1 - q) * rho * a - q * delta * (1 - a)
        H.append(u + drift * dV - lam * V + gamma * (q * d.U1 - V))
    H0, H1 = H
    best = np.maximum(H0, H1)
    interior = q < 1
    scale = max(abs(d.u0), abs(d.u1), 1.0)
    if np.all(H1[interior] >= H0[interior] - 1e-12 * scale):
        action = 1 if np.any(H1[interior] > H0[interior] + 1e-12 * scale) or not interior.any() else "both"
    elif np.all(H0[interior] >= H1[interior] - 1e-12 * scale):
        action = 0
    else:
        action = "mixed"
    rep = _report("hjb", q, best, optimal_action=action)
    rep.extra["residual_by_action"] = {"0": float(np.max(np.abs(H0))), "1": float(np.max(np.abs(H1)))}
    return rep


def absorbing_shirk_check(gamma: float, d: DerivedParams) -> bool:
    """Whether, once shirking under a memoryless schedule, shirking forever
    beats returning to work forever."""
    if not gamma > 0:
        raise InvalidParams("gamma must be > 0")
    work = d.U1 * d.lambda1 / (d.lambda1 + gamma)
    shirk = d.U0 * d.lambda0 / (d.lambda0 + gamma)
    return work <= shirk * (1 + 1e-12)
