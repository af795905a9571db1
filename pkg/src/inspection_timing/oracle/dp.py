"""Discretized dynamic program for the agent's best response to a renewal
inspection policy.

The state is the time since the last passed inspection and the probability
``q`` that an inspection would be passed right now.  Without recovery ``q``
only decays while shirking, so it is tracked exactly by the number of shirk
steps taken; with recovery it lives on a uniform grid with linear
interpolation.  Within a step the flow payoff, project survival and any
inspection hazard are integrated exactly, so the scheme is first order only
through the piecewise-constant action.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import InvalidParams, NonConvergence, WrongRegime
from ..model import ModelParams, derive
from ..policies import DelayedExponential, DiscreteGap, Exponential, InspectionPolicy, Periodic

log = logging.getLogger(__name__)

# prefer working when the two action values are this close
TIE_TOL = 1e-14
MAX_STORED_ROWS = 512


@dataclass(frozen=True)
class DPConfig:
    dt: float = 1e-3
    horizon: Optional[float] = None
    q_grid: int = 201
    tol: float = 1e-9
    max_outer: int = 60
    # slack for calling work optimal on path; None means 1e-10 * max(U0, U1)
    action_tol: Optional[float] = None

    def validated(self, params: ModelParams) -> "DPConfig":
        d = derive(params)
        floor = 10.0 / min(d.lambda0, d.lambda1)
        horizon = floor if self.horizon is None else float(self.horizon)
        if not self.dt > 0:
            raise InvalidParams("dt must be > 0")
        if horizon < floor * (1 - 1e-12):
            raise InvalidParams(f"horizon must be >= 10/min(lambda0, lambda1) = {floor}")
        if self.q_grid < 64:
            raise InvalidParams("q_grid needs at least 64 points")
        if not self.tol > 0 or self.max_outer < 1:
            raise InvalidParams("tol must be > 0 and max_outer >= 1")
        return DPConfig(self.dt, horizon, self.q_grid, self.tol, self.max_outer, self.action_tol)


@dataclass
class DPSolution:
    W: float
    value: np.ndarray
    action: np.ndarray
    t_grid: np.ndarray
    q_grid: np.ndarray
    on_path_work: bool
    shirk_gain: float = 0.0
    iterations: int = 0
    dt: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"W": self.W, "on_path_work": self.on_path_work, "shirk_gain": self.shirk_gain,
                "iterations": self.iterations, "dt": self.dt}


def _iexp(k, dt):
    """Integral of exp(-k s) over [0, dt], vectorized and safe at k = inf."""
    k = np.asarray(k, dtype=float)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        out = -np.expm1(-k * dt) / k
    out = np.where(np.isinf(k), 0.0, out)
    return np.where(np.abs(k * dt) < 1e-14, dt, out)


@dataclass
class _Layout:
    """Time phase ``[0, n_steps*dt]`` with no inspection hazard, inspection
    atoms (index -> conditional mass), then an optional memoryless tail."""
    dt: float
    n_steps: int
    atoms: dict
    tail_gamma: Optional[float]


def _layout(policy: InspectionPolicy, dt: float) -> _Layout:
    if isinstance(policy, Periodic):
        n = max(1, math.ceil(policy.tau / dt - 1e-9))
        return _Layout(policy.tau / n, n, {n: 1.0}, None)
    if isinstance(policy, Exponential):
        return _Layout(dt, 0, {}, policy.gamma)
    if isinstance(policy, DelayedExponential):
        if policy.tau_hat == 0:
            return _Layout(dt, 0, {}, policy.gamma)
        n = max(1, math.ceil(policy.tau_hat / dt - 1e-9))
        atoms = {n: policy.pi} if policy.pi > 0 else {}
        return _Layout(policy.tau_hat / n, n, atoms, policy.gamma if policy.pi < 1 else None)
    if isinstance(policy, DiscreteGap):
        atoms = {}
        remaining = 1.0
        for t, p in zip(policy.times, policy.probs):
            i = max(1, int(round(t / dt)))
            atoms[i] = atoms.get(i, 0.0) + p
        cond = {}
        for i in sorted(atoms):
            cond[i] = 1.0 if remaining <= 0 else min(1.0, atoms[i] / remaining)
            remaining -= atoms[i]
        last = max(cond)
        cond[last] = 1.0
        return _Layout(dt, last, cond, None)
    raise InvalidParams(f"unsupported policy {policy!r}")


class _Model:
    """Per-step coefficients shared by both belief representations."""

    def __init__(self, params: ModelParams, dt: float):
        d = derive(params)
        self.d = d
        self.dt = dt
        self.lam = np.array([d.lambda0, d.lambda1])
        self.u = np.array([d.u0, d.u1])
        self.delta = math.inf if params.perfect else params.delta
        self.rho = params.rho

    def flow(self, a: int, g: float = 0.0) -> float:
        return float(self.u[a] * _iexp(self.lam[a] + g, self.dt))

    def beta(self, a: int, g: float = 0.0) -> float:
        return math.exp(-(self.lam[a] + g) * self.dt)


# --- exact belief index (no recovery) -------------------------------------------

def _index_beliefs(m: _Model, n_states: int) -> np.ndarray:
    if math.isinf(m.delta):
        return np.array([1.0, 0.0])
    return np.exp(-m.delta * m.dt * np.arange(n_states))


def _tail_index(m: _Model, gamma: float, q: np.ndarray, W: float):
    """Stationary memoryless phase on belief indices.

    Working keeps the index, shirking advances it.  Working forever from
    index k is worth A(k); otherwise the agent shirks one step.  The last
    index is treated as absorbing.
    """
    dt = m.dt
    i1 = _iexp(m.lam[1] + gamma, dt)
    i0 = _iexp(m.lam[0] + gamma + m.delta, dt)
    c1 = m.flow(1, gamma) + gamma * q * W * i1
    dc1 = gamma * q * i1
    c0 = m.flow(0, gamma) + gamma * q * W * i0
    dc0 = gamma * q * i0
    b1, b0 = m.beta(1, gamma), m.beta(0, gamma)
    A, dA = c1 / (1 - b1), dc1 / (1 - b1)
    K = len(q) - 1
    V = np.empty(K + 1)
    dV = np.empty(K + 1)
    act = np.empty(K + 1, dtype=np.int8)
    gap = np.empty(K + 1)
    shirk_last = c0[K] / (1 - b0)
    if A[K] >= shirk_last - TIE_TOL:
        V[K], dV[K], act[K] = A[K], dA[K], 1
    else:
        V[K], dV[K], act[K] = shirk_last, dc0[K] / (1 - b0), 0
    gap[K] = shirk_last - A[K]
    for k in range(K - 1, -1, -1):
        B = c0[k] + b0 * V[k + 1]
        gap[k] = B - A[k]
        if A[k] >= B - TIE_TOL:
            V[k], dV[k], act[k] = A[k], dA[k], 1
        else:
            V[k], dV[k], act[k] = B, dc0[k] + b0 * dV[k + 1], 0
    return V, dV, act, gap


def _solve_index(policy, params, cfg: DPConfig, W: float, store: bool):
    lay = _layout(policy, cfg.dt)
    m = _Model(params, lay.dt)
    perfect = math.isinf(m.delta)
    n = lay.n_steps
    if perfect:
        n_tail = 2
    else:
        n_tail = max(n + 1, math.ceil(cfg.horizon / lay.dt) + 1)
    q_all = _index_beliefs(m, n_tail)
    size = 2 if perfect else n + 1
    q = q_all[:size]
    nxt = np.minimum(np.arange(size) + 1, size - 1)

    shirk_gain = -math.inf
    if lay.tail_gamma is not None:
        Vt, dVt, at, gap = _tail_index(m, lay.tail_gamma, q_all, W)
        shirk_gain = gap[0]
        if n == 0:
            keep = min(len(Vt), 4096)
            return (Vt[0], dVt[0], shirk_gain, [Vt[:keep]], [at[:keep]], [0.0], q_all[:keep], lay.dt)
        V, dV = Vt[:size].copy(), dVt[:size].copy()
    else:
        V, dV = np.zeros(size), np.zeros(size)

    def apply_atom(i, V, dV):
        mass = lay.atoms.get(i, 0.0)
        if mass:
            return mass * q * W + (1 - mass) * V, mass * q + (1 - mass) * dV
        return V, dV

    V, dV = apply_atom(n, V, dV)
    rows_v, rows_a, rows_t = [], [], []
    stride = max(1, n // MAX_STORED_ROWS + 1)
    f0, f1 = m.flow(0), m.flow(1)
    b0, b1 = m.beta(0), m.beta(1)
    for i in range(n, 0, -1):
        # step [t_{i-1}, t_i)
        Q1 = f1 + b1 * V
        Q0 = f0 + b0 * V[nxt]
        work = Q1 >= Q0 - TIE_TOL
        shirk_gain = max(shirk_gain, Q0[0] - Q1[0])
        V = np.where(work, Q1, Q0)
        dV = np.where(work, b1 * dV, b0 * dV[nxt])
        if store and (i - 1) % stride == 0:
            rows_v.append(V.copy())
            rows_a.append(work.astype(np.int8))
            rows_t.append((i - 1) * lay.dt)
        if i - 1 >= 1:
            V, dV = apply_atom(i - 1, V, dV)
    return V[0], dV[0], shirk_gain, rows_v[::-1], rows_a[::-1], rows_t[::-1], q, lay.dt


# --- interpolated belief grid (recovery) ------------------------------------------

def _interp_matrix(grid: np.ndarray, targets: np.ndarray) -> np.ndarray:
    n = len(grid)
    pos = np.clip(targets, grid[0], grid[-1])
    j = np.clip(np.searchsorted(grid, pos, side="right") - 1, 0, n - 2)
    w = (pos - grid[j]) / (grid[j + 1] - grid[j])
    M = np.zeros((len(targets), n))
    rows = np.arange(len(targets))
    M[rows, j] += 1 - w
    M[rows, j + 1] += w
    return M


def _grid_coeffs(m: _Model, q: np.ndarray, g: float, W: float):
    dt = m.dt
    i1 = float(_iexp(m.lam[1] + g, dt))
    i1r = float(_iexp(m.lam[1] + g + m.rho, dt))
    i0 = float(_iexp(m.lam[0] + g + m.delta, dt))
    dc1 = g * (i1 - (1 - q) * i1r)
    dc0 = g * q * i0
    return m.flow(1, g) + W * dc1, dc1, m.flow(0, g) + W * dc0, dc0


def _solve_grid(policy, params, cfg: DPConfig, W: float, store: bool):
    lay = _layout(policy, cfg.dt)
    m = _Model(params, lay.dt)
    if math.isinf(m.delta):
        raise WrongRegime("recovery with perfect inspections is not modelled")
    q = np.linspace(0.0, 1.0, cfg.q_grid)
    q_work = 1 - (1 - q) * math.exp(-m.rho * lay.dt)
    q_shirk = q * math.exp(-m.delta * lay.dt)
    P1, P0 = _interp_matrix(q, q_work), _interp_matrix(q, q_shirk)
    shirk_gain = -math.inf
    n = lay.n_steps
    eye = np.eye(len(q))

    if lay.tail_gamma is not None:
        g = lay.tail_gamma
        c1, dc1, c0, dc0 = _grid_coeffs(m, q, g, W)
        b1, b0 = m.beta(1, g), m.beta(0, g)
        act = np.ones(len(q), dtype=bool)
        for _ in range(100):
            P = np.where(act[:, None], b1 * P1, b0 * P0)
            c = np.where(act, c1, c0)
            V = np.linalg.solve(eye - P, c)
            Q1, Q0 = c1 + b1 * P1 @ V, c0 + b0 * P0 @ V
            new = Q1 >= Q0 - TIE_TOL
            if np.array_equal(new, act):
                break
            act = new
        else:
            raise NonConvergence("policy iteration on the memoryless phase did not settle")
        dV = np.linalg.solve(eye - P, np.where(act, dc1, dc0))
        shirk_gain = max(shirk_gain, Q0[-1] - Q1[-1])
    else:
        V, dV = np.zeros(len(q)), np.zeros(len(q))
        act = np.ones(len(q), dtype=bool)

    if n == 0:
        return V[-1], dV[-1], shirk_gain, [V], [act.astype(np.int8)], [0.0], q, lay.dt

    def apply_atom(i, V, dV):
        mass = lay.atoms.get(i, 0.0)
        if mass:
            return mass * q * W + (1 - mass) * V, mass * q + (1 - mass) * dV
        return V, dV

    V, dV = apply_atom(n, V, dV)
    rows_v, rows_a, rows_t = [], [], []
    stride = max(1, n // MAX_STORED_ROWS + 1)
    f0, f1 = m.flow(0), m.flow(1)
    b0, b1 = m.beta(0), m.beta(1)
    for i in range(n, 0, -1):
        Q1, Q0 = f1 + b1 * (P1 @ V), f0 + b0 * (P0 @ V)
        dQ1, dQ0 = b1 * (P1 @ dV), b0 * (P0 @ dV)
        work = Q1 >= Q0 - TIE_TOL
        shirk_gain = max(shirk_gain, Q0[-1] - Q1[-1])
        V, dV = np.where(work, Q1, Q0), np.where(work, dQ1, dQ0)
        if store and (i - 1) % stride == 0:
            rows_v.append(V.copy())
            rows_a.append(work.astype(np.int8))
            rows_t.append((i - 1) * lay.dt)
        if i - 1 >= 1:
            V, dV = apply_atom(i - 1, V, dV)
    return V[-1], dV[-1], shirk_gain, rows_v[::-1], rows_a[::-1], rows_t[::-1], q, lay.dt


# --- entry point ------------------------------------------------------------------

def _no_inspection(params: ModelParams, cfg: DPConfig) -> DPSolution:
    """Without inspections the problem is stationary: compare the two
    stationary actions by policy iteration on the one-step recursion."""
    m = _Model(params, cfg.dt)
    vals = [m.flow(a) / (1 - m.beta(a)) for a in (0, 1)]
    a = 1
    for _ in range(4):
        V = vals[a]
        q_other = m.flow(1 - a) + m.beta(1 - a) * V
        if q_other > V + TIE_TOL:
            a = 1 - a
        else:
            break
    W = vals[a]
    return DPSolution(W=W, value=np.array([[W]]), action=np.array([[a]], dtype=np.int8),
                      t_grid=np.array([0.0]), q_grid=np.array([1.0]), on_path_work=(a == 1),
                      shirk_gain=vals[0] - vals[1], iterations=1, dt=cfg.dt)


def agent_dp(policy: Optional[InspectionPolicy], params: ModelParams,
             cfg: Optional[DPConfig] = None) -> DPSolution:
    """Best-response value ``W`` at a fresh passed inspection.

    ``W`` solves ``W = V_0(W)`` where ``V_0(W)`` is the value of the
    discretized problem over one gap when passing is worth ``W``; it is found
    by Newton steps on this convex piecewise-linear map.
    """
    cfg = (cfg or DPConfig()).validated(params)
    if policy is None:
        return _no_inspection(params, cfg)
    solve = _solve_grid if params.rho > 0 else _solve_index
    d = derive(params)
    W = d.U1
    for it in range(1, cfg.max_outer + 1):
        V0, dV0, _, *_ = solve(policy, params, cfg, W, False)
        if dV0 >= 1:
            raise NonConvergence("renewal map is not a contraction")
        step = (V0 - W) / (1 - dV0)
        W += step
        log.debug("dp outer %d: W=%.15g step=%.3g", it, W, step)
        if abs(step) < cfg.tol:
            break
    else:
        raise NonConvergence(f"renewal value did not converge in {cfg.max_outer} iterations")
    V0, dV0, gain, rows_v, rows_a, rows_t, q, dt = solve(policy, params, cfg, W, True)
    scale = max(abs(d.U0), abs(d.U1))
    action_tol = cfg.action_tol if cfg.action_tol is not None else 1e-10 * scale
    width = min(len(r) for r in rows_v)
    value = np.array([r[:width] for r in rows_v])
    action = np.array([r[:width] for r in rows_a]) if rows_a else np.ones_like(value, dtype=np.int8)
    return DPSolution(W=float(W), value=value, action=action, t_grid=np.array(rows_t), q_grid=q[:width],
                      on_path_work=bool(gain <= action_tol), shirk_gain=float(gain),
                      iterations=it, dt=dt, extra={"action_tol": action_tol})
