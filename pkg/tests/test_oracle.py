import math

import numpy as np
import pytest

from inspection_timing import (PERFECT, DelayedExponential, Exponential, InfeasibleConstraint,
                               InvalidParams, ModelParams, Periodic, PreconditionViolated,
                               ShirkThenWork, derive, expected_payoff, solve_optimal)
from inspection_timing.oracle import (DPConfig, absorbing_shirk_check, agent_dp, best_deviation_scan,
                                      fixed_point_gamma, relaxed_lp, verify_binding_constraints,
                                      verify_fixed_point, verify_hjb, verify_policy)
from inspection_timing.payoffs import loss_shirk_x

from conftest import INNOVATION, MAINTENANCE, MAINTENANCE_NOISY, LN2, PERIODIC_LN2, RECOVERY


# --- dynamic programming -------------------------------------------------------------

def test_dp_no_inspection_value():
    for params in (INNOVATION, MAINTENANCE_NOISY, ModelParams.from_derived(1.0, 2.0, 1.0, 1.5, 3.0)):
        d = derive(params)
        sol = agent_dp(None, params)
        assert sol.W == pytest.approx(max(d.U0, d.U1), rel=1e-3)
        assert sol.on_path_work == (d.U1 >= d.U0)


def test_dp_periodic_ln2():
    d = derive(PERIODIC_LN2)
    on = agent_dp(Periodic(LN2), PERIODIC_LN2)
    assert on.W == pytest.approx(d.U1, abs=5e-3) and on.on_path_work
    off = agent_dp(Periodic(1.05 * LN2), PERIODIC_LN2)
    assert off.W > d.U1 + 1e-3 and not off.on_path_work
    assert (off.action == 0).any()


def test_dp_exponential_perfect():
    d = derive(MAINTENANCE)
    sol = agent_dp(Exponential(1.2), MAINTENANCE)
    assert sol.W == pytest.approx(d.U1, abs=5e-3) and sol.on_path_work


def test_dp_agrees_with_closed_form_shirk_work_shirk():
    # pi = 0.5 at gamma* is below pi*, so the agent strictly gains from a deviation
    sol = solve_optimal(MAINTENANCE_NOISY)
    loose = DelayedExponential(sol.tau_hat, 0.5, sol.gamma_star)
    dp = agent_dp(loose, MAINTENANCE_NOISY)
    d = derive(MAINTENANCE_NOISY)
    best = best_deviation_scan(loose, MAINTENANCE_NOISY, "ShirkWorkShirk").max_payoff
    assert best > d.U1
    # the closed form is one feasible plan, so it cannot beat the DP by more than its tolerance
    assert best <= dp.W + 5e-3


def test_dp_recovery_first_order_convergence():
    vals = [agent_dp(Exponential(1.2), RECOVERY, DPConfig(dt=dt)).W for dt in (4e-3, 2e-3, 1e-3)]
    d1, d2 = vals[1] - vals[0], vals[2] - vals[1]
    assert d1 != 0 and 1.5 < d1 / d2 < 2.5


def test_dp_config_validation():
    with pytest.raises(InvalidParams):
        agent_dp(Periodic(1.0), INNOVATION, DPConfig(dt=0.0))
    with pytest.raises(InvalidParams):
        agent_dp(Periodic(1.0), INNOVATION, DPConfig(horizon=1.0))


# --- deviation scans -----------------------------------------------------------------

def test_shirk_then_work_binding_at_t_bar():
    sol = solve_optimal(INNOVATION)
    res = best_deviation_scan(sol.policy, INNOVATION, "ShirkThenWork")
    assert res.max_payoff == pytest.approx(derive(INNOVATION).U1, abs=1e-10)
    assert res.argmax_time == pytest.approx(LN2, abs=1e-8)


def test_work_then_shirk_constant_under_exponential():
    res = best_deviation_scan(Exponential(1.2), MAINTENANCE, "WorkThenShirk", n_grid=50)
    assert np.max(np.abs(res.payoffs - derive(MAINTENANCE).U1)) < 1e-10


def test_switch_time_zero_of_shirk_then_work_is_on_path():
    for params, policy in ((INNOVATION, Periodic(0.9)), (MAINTENANCE, Exponential(1.2))):
        assert expected_payoff(ShirkThenWork(0.0), policy, params) == pytest.approx(derive(params).U1)


def test_scan_never_exceeds_dp():
    cases = [(INNOVATION, Periodic(1.0)), (MAINTENANCE, Exponential(1.0)), (MAINTENANCE_NOISY, Periodic(0.8))]
    for params, policy in cases:
        dp = agent_dp(policy, params)
        for fam in ("ShirkThenWork", "WorkThenShirk", "ShirkToEnd"):
            assert best_deviation_scan(policy, params, fam).max_payoff <= dp.W + 5e-3


def test_scan_rejects_unknown_family():
    with pytest.raises(InvalidParams):
        best_deviation_scan(Periodic(1.0), INNOVATION, "Sabbatical")
    with pytest.raises(InvalidParams):
        best_deviation_scan(Periodic(1.0), INNOVATION, "ShirkWorkShirk")


# --- relaxed LP -------------------------------------------------------------------------

def test_lp_concave_loss_point_mass():
    d = derive(INNOVATION)
    res = relaxed_lp(lambda x: loss_shirk_x(x, d, PERFECT), 0.75, grid_n=2000)
    eff = res.effective_support()
    assert len(eff) == 1 and abs(eff[0] - 9 / 64) <= res.cell


def test_lp_convex_loss_extreme_points():
    res = relaxed_lp(lambda x: x * x, 0.5, grid_n=1000)
    assert res.support[0] == pytest.approx(0.001) and res.support[-1] == 1.0
    assert res.mean == pytest.approx(0.5, abs=2e-3)


def test_lp_linear_loss_every_binding_mix_costs_the_same():
    res = relaxed_lp(lambda x: x, 0.4, grid_n=500)
    assert res.mean == pytest.approx(0.4, abs=1e-12)


def test_lp_infeasible_threshold():
    with pytest.raises(InfeasibleConstraint):
        relaxed_lp(lambda x: x, 2.0, grid_n=100)


# --- residual checks --------------------------------------------------------------------

def test_binding_residuals():
    good = verify_binding_constraints(Exponential(1.2), MAINTENANCE)
    assert good["max_residual"] < 1e-10
    bad = verify_binding_constraints(Exponential(1.32), MAINTENANCE)
    assert bad["max_residual"] > 1e-3
    sol = solve_optimal(MAINTENANCE_NOISY)
    rep = verify_binding_constraints(sol.policy, MAINTENANCE_NOISY)
    assert rep["start"].max_residual < 1e-8 and rep["tail"].max_residual < 1e-8
    with pytest.raises(InvalidParams):
        verify_binding_constraints(Periodic(1.0), INNOVATION)


def test_residual_report_json_shape():
    out = verify_binding_constraints(Exponential(1.2), MAINTENANCE)["tail"].to_dict()
    assert set(out) >= {"check", "grid", "max_residual", "argmax_location"}
    assert out["grid"]["n"] == 1001


def test_fixed_point_lemmas():
    assert fixed_point_gamma("single", 2.0, 1.0) == 1.0
    assert fixed_point_gamma("sum", 2.0, 1.0, B=1.0, beta=3.0) == 3.0
    assert verify_fixed_point("single", 2.0, 1.0).max_residual < 1e-10
    assert verify_fixed_point("single", 2.0, 1.0, pi=0.3).max_residual < 1e-10
    assert verify_fixed_point("sum", 2.0, 1.0, B=1.0, beta=3.0).max_residual < 1e-10
    assert verify_fixed_point("single", 2.0, 1.0, gamma_candidate=1.1).max_residual > 1e-3
    with pytest.raises(PreconditionViolated):
        fixed_point_gamma("single", 0.5, 1.0)
    with pytest.raises(PreconditionViolated):
        fixed_point_gamma("sum", 2.0, 1.0, B=1.0, beta=1.0)


def test_hjb_maintenance_and_recovery():
    sol = solve_optimal(MAINTENANCE_NOISY)
    rep = verify_hjb(MAINTENANCE_NOISY, sol.gamma_star)
    assert rep.max_residual < 1e-10 and rep.extra["optimal_action"] == 0
    rep = verify_hjb(RECOVERY, 0.2 * 1.5 * 3 / 0.7)
    assert rep.max_residual < 1e-10 and rep.extra["optimal_action"] == 1
    off = verify_hjb(MAINTENANCE_NOISY, 1.1 * sol.gamma_star)
    assert off.max_residual > 1e-3


def test_hjb_indifferent_at_full_passage():
    sol = solve_optimal(MAINTENANCE_NOISY)
    rep = verify_hjb(MAINTENANCE_NOISY, sol.gamma_star, q_grid=[1.0])
    assert rep.extra["residual_by_action"]["0"] < 1e-12
    assert rep.extra["residual_by_action"]["1"] < 1e-12


def test_absorbing_shirk():
    assert absorbing_shirk_check(1.2, derive(MAINTENANCE))
    d = derive(ModelParams.from_derived(1.0, 1.0, 2.0, 2.0, PERFECT))
    assert absorbing_shirk_check(1.0, d)
    # u1 > u0 with lambda1 > lambda0: returning to work wins once gamma is large
    d = derive(ModelParams.from_derived(1.0, 3.0, 2.0, 1.0, PERFECT))
    assert absorbing_shirk_check(0.01, d)
    assert not absorbing_shirk_check(100.0, d)


# --- combined report ---------------------------------------------------------------------

def test_verify_policy_pass_and_fail():
    sol = solve_optimal(MAINTENANCE_NOISY)
    assert verify_policy(MAINTENANCE_NOISY, sol.policy, solution=sol)["pass"]
    sol1 = solve_optimal(INNOVATION)
    rep = verify_policy(INNOVATION, Periodic(1.05 * sol1.tau_star))
    assert not rep["pass"]
    dp = next(c for c in rep["checks"] if c["check"] == "agent_dp")
    assert dp["W_minus_U1"] > 1e-3


def test_verify_policy_without_inspections():
    rep = verify_policy(INNOVATION, None)
    assert [c["check"] for c in rep["checks"]] == ["no_inspection_value"]
    assert rep["pass"]
