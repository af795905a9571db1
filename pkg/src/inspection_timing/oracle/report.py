"""Run every applicable oracle against a policy and collect a pass/fail report."""

from __future__ import annotations

from typing import Optional

from ..model import ModelParams, check_assumptions, derive
from ..policies import DelayedExponential, Exponential, InspectionPolicy, Periodic
from .deviations import best_deviation_scan
from .dp import DPConfig, agent_dp
from .residuals import verify_binding_constraints, verify_hjb

DP_TOL = 5e-3
DEVIATION_TOL = 1e-8
RESIDUAL_TOL = 1e-8


def verify_policy(params: ModelParams, policy: Optional[InspectionPolicy], dt: float = 1e-3,
                  solution=None) -> dict:
    """Collect oracle outputs.

    Incentive checks (DP and deviation families) apply to any policy.  The
    binding-constraint and HJB residuals test optimality, so they are run only
    when ``solution`` says the policy came from the solver.
    """
    d = derive(params)
    checks = []
    report = {"assumptions": check_assumptions(params).to_dict(),
              "policy": None if policy is None else policy.to_dict()}

    dp = agent_dp(policy, params, DPConfig(dt=dt))
    if policy is None:
        target = max(d.U0, d.U1)
        ok = abs(dp.W - target) <= 1e-3 * abs(target)
        checks.append({"check": "no_inspection_value", "W": dp.W, "expected": target,
                       "work_optimal": dp.on_path_work, "pass": ok})
        report["checks"] = checks
        report["pass"] = ok
        return report

    ok = abs(dp.W - d.U1) <= DP_TOL and dp.on_path_work
    checks.append({"check": "agent_dp", "W": dp.W, "W_minus_U1": dp.W - d.U1,
                   "work_optimal": dp.on_path_work, "shirk_gain": dp.shirk_gain, "pass": ok})

    families = ["ShirkToEnd", "ShirkThenWork", "WorkThenShirk"]
    if isinstance(policy, DelayedExponential):
        families.append("ShirkWorkShirk")
    for fam in families:
        res = best_deviation_scan(policy, params, fam)
        gain = res.max_payoff - d.U1
        checks.append({"check": f"deviation_{fam}", "max_payoff": res.max_payoff,
                       "argmax_time": res.argmax_time, "gain": gain, "pass": gain <= DEVIATION_TOL})

    if solution is not None:
        for name, value in solution.residuals.items():
            if isinstance(value, (int, float)):
                checks.append({"check": f"solver_{name}", "max_residual": abs(value),
                               "pass": abs(value) <= RESIDUAL_TOL})
        if isinstance(policy, (Exponential, DelayedExponential)) and params.rho == 0:
            b = verify_binding_constraints(policy, params)
            for key in ("start", "tail"):
                if key in b:
                    rep = b[key].to_dict()
                    rep["pass"] = rep["max_residual"] <= RESIDUAL_TOL
                    checks.append(rep)
        if not params.perfect and isinstance(policy, (Exponential, DelayedExponential)):
            rep = verify_hjb(params, policy.gamma).to_dict()
            rep["pass"] = rep["max_residual"] <= 1e-10
            checks.append(rep)

    report["checks"] = checks
    report["pass"] = all(c["pass"] for c in checks)
    return report
