"""Independent checks on the solver: dynamic programming, grid LP, residuals."""

from .deviations import DeviationResult, best_deviation_scan
from .dp import DPConfig, DPSolution, agent_dp
from .lp import LPResult, relaxed_lp
from .report import verify_policy
from .residuals import (ResidualReport, absorbing_shirk_check, fixed_point_gamma,
                        verify_binding_constraints, verify_fixed_point, verify_hjb)

__all__ = [
    "DPConfig", "DPSolution", "agent_dp", "DeviationResult", "best_deviation_scan",
    "LPResult", "relaxed_lp", "ResidualReport", "absorbing_shirk_check", "fixed_point_gamma",
    "verify_binding_constraints", "verify_fixed_point", "verify_hjb", "verify_policy",
]
