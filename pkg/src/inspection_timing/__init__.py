"""Optimal timing of inspections for a principal monitoring a hidden-effort agent."""

from .errors import (DivergentCost, Infeasible, InfeasibleConstraint, InspectionError,
                     InvalidParams, NonConvergence, PreconditionViolated, WrongRegime)
from .model import (PERFECT, AssumptionReport, DerivedParams, ModelParams, Regime,
                    check_assumptions, classify_regime, derive, microfound)
from .payoffs import (cost_ratio, effective_discount, expected_payoff, loss_shirk, loss_shirk_x,
                      passage_probability, policy_cost, u_shirk_work, u_shirk_work_shirk,
                      u_work_shirk)
from .policies import (ALWAYS_SHIRK, ActionStrategy, AlwaysWork, DelayedExponential, DiscreteGap,
                       Exponential, InspectionPolicy, Periodic, ShirkThenWork, ShirkWorkShirk, Step,
                       WorkThenShirk, policy_from_dict, strategy_from_dict, strategy_to_dict)
from .solver import PolicySolution, recovery_robustness, solve_lambda_bar_b, solve_optimal

__version__ = "0.1.0"

__all__ = [
    "DivergentCost", "Infeasible", "InfeasibleConstraint", "InspectionError", "InvalidParams",
    "NonConvergence", "PreconditionViolated", "WrongRegime",
    "PERFECT", "AssumptionReport", "DerivedParams", "ModelParams", "Regime", "check_assumptions",
    "classify_regime", "derive", "microfound",
    "cost_ratio", "effective_discount", "expected_payoff", "loss_shirk", "loss_shirk_x",
    "passage_probability", "policy_cost", "u_shirk_work", "u_shirk_work_shirk", "u_work_shirk",
    "ALWAYS_SHIRK", "ActionStrategy", "AlwaysWork", "DelayedExponential", "DiscreteGap",
    "Exponential", "InspectionPolicy", "Periodic", "ShirkThenWork", "ShirkWorkShirk", "Step",
    "WorkThenShirk", "policy_from_dict", "strategy_from_dict", "strategy_to_dict",
    "PolicySolution", "recovery_robustness", "solve_lambda_bar_b", "solve_optimal",
]
