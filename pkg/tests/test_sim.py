import math

import numpy as np
import pytest

from inspection_timing import (AlwaysWork, Exponential, InvalidParams, Periodic, ShirkThenWork,
                               WorkThenShirk, derive, expected_payoff, policy_cost, solve_optimal)
from inspection_timing.sim import END_CAUSES, SimConfig, estimate, simulate_run
from inspection_timing.sim import rng
from inspection_timing.sim.engine import default_horizon

from conftest import INNOVATION, MAINTENANCE, MAINTENANCE_NOISY, LN2, PERIODIC_LN2


def test_uniforms_in_open_interval_and_deterministic():
    seeds = rng.run_seed(7, np.arange(1000, dtype=np.uint64))
    u = rng.uniforms(seeds, rng.STREAM_GAP, np.zeros(1000, dtype=np.uint64))
    assert ((u > 0) & (u < 1)).all()
    assert np.array_equal(u, rng.uniforms(seeds, rng.STREAM_GAP, np.zeros(1000, dtype=np.uint64)))
    assert abs(u.mean() - 0.5) < 0.05


def test_always_work_never_breaks_down_or_fails():
    for params in (MAINTENANCE_NOISY, MAINTENANCE_NOISY.with_(rho=0.8)):
        rep = estimate(Exponential(2.0), AlwaysWork(), params, SimConfig(n_runs=5000, seed=1))
        assert rep.end_causes["breakdown"] == 0.0
        assert rep.end_causes["termination-after-fail"] == 0.0


def test_no_breakthrough_periodic_cost_is_geometric():
    params = INNOVATION.with_(lambda_g=0.0)
    out = simulate_run(Periodic(1.0), AlwaysWork(), params, 123)
    assert out["end_cause"] == "censored"
    # discounted cost sum_{n>=1} e^{-0.5 n}
    assert out["disc_cost"] == pytest.approx(1 / (math.exp(0.5) - 1), rel=1e-10)


def test_simulate_run_reproducible_and_matches_estimate():
    seed = 99
    a = simulate_run(Exponential(1.2), ShirkThenWork(0.3), MAINTENANCE_NOISY, int(rng.run_seed(seed, 5)))
    b = simulate_run(Exponential(1.2), ShirkThenWork(0.3), MAINTENANCE_NOISY, int(rng.run_seed(seed, 5)))
    assert a == b
    rep = estimate(Exponential(1.2), ShirkThenWork(0.3), MAINTENANCE_NOISY, SimConfig(n_runs=10, seed=seed),
                   keep_runs=True)
    assert rep.runs["payoff"][5] == a["disc_payoff"]
    assert rep.runs["cost"][5] == a["disc_cost"]


def test_report_invariants():
    rep = estimate(Periodic(0.5), WorkThenShirk(0.2), MAINTENANCE_NOISY, SimConfig(n_runs=4000, seed=3),
                   keep_runs=True)
    assert sum(rep.end_causes.values()) == pytest.approx(1.0, abs=1e-12)
    assert set(rep.end_causes) == set(END_CAUSES)
    x = rep.runs["payoff"]
    assert rep.se_agent_payoff == pytest.approx(x.std(ddof=1) / math.sqrt(len(x)), rel=1e-10)


def test_chunking_and_workers_do_not_change_results():
    base = estimate(Periodic(0.5), ShirkThenWork(0.1), MAINTENANCE_NOISY, SimConfig(n_runs=3000, seed=11))
    chunked = estimate(Periodic(0.5), ShirkThenWork(0.1), MAINTENANCE_NOISY,
                       SimConfig(n_runs=3000, seed=11, chunk=257, workers=2))
    assert base.to_dict() == chunked.to_dict()


def test_standard_error_halves_with_four_times_the_runs():
    small = estimate(Exponential(1.2), AlwaysWork(), MAINTENANCE, SimConfig(n_runs=20000, seed=5))
    large = estimate(Exponential(1.2), AlwaysWork(), MAINTENANCE, SimConfig(n_runs=80000, seed=5))
    assert large.se_cost / small.se_cost == pytest.approx(0.5, rel=0.1)


@pytest.mark.parametrize("name,params,policy,strategy", [
    ("periodic_ln2", PERIODIC_LN2, Periodic(LN2), AlwaysWork()),
    ("exponential_maintenance", MAINTENANCE, Exponential(1.2), AlwaysWork()),
    ("shirk_then_work_innovation", INNOVATION, None, None),
    ("work_then_shirk_noisy", MAINTENANCE_NOISY, Periodic(0.8), WorkThenShirk(0.3)),
    ("shirk_noisy_recovery", MAINTENANCE_NOISY.with_(rho=0.7), Exponential(2.0), ShirkThenWork(0.4)),
])
def test_monte_carlo_matches_closed_forms(name, params, policy, strategy):
    if policy is None:
        sol = solve_optimal(params)
        policy, strategy = sol.policy, ShirkThenWork(sol.t_bar)
    d = derive(params)
    rep = estimate(policy, strategy, params, SimConfig(n_runs=200_000, seed=2024))
    # repeating the plan after every passed inspection: W = a0 + (a1 - a0) W
    a0 = expected_payoff(strategy, policy, params, 0.0)
    a1 = expected_payoff(strategy, policy, params, 1.0)
    target = a0 / (1 - (a1 - a0))
    assert abs(rep.mean_agent_payoff - target) <= 4 * rep.se_agent_payoff
    if isinstance(strategy, AlwaysWork):
        assert abs(rep.mean_cost - policy_cost(policy, d)) <= 4 * rep.se_cost


def test_binding_deviation_payoff_equals_on_path_value():
    sol = solve_optimal(INNOVATION)
    rep = estimate(sol.policy, ShirkThenWork(sol.t_bar), INNOVATION, SimConfig(n_runs=200_000, seed=8))
    assert abs(rep.mean_agent_payoff - derive(INNOVATION).U1) <= 3 * rep.se_agent_payoff


def test_trace_csv(tmp_path):
    rep = estimate(Periodic(0.5), AlwaysWork(), MAINTENANCE_NOISY, SimConfig(n_runs=5, seed=1), keep_runs=True)
    path = tmp_path / "trace.csv"
    rep.write_trace(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "run,end_cause,end_time,n_inspections,disc_cost,disc_payoff"
    assert len(lines) == 6
    no_runs = estimate(Periodic(0.5), AlwaysWork(), MAINTENANCE_NOISY, SimConfig(n_runs=5, seed=1))
    with pytest.raises(InvalidParams):
        no_runs.write_trace(path)


def test_config_validation_and_horizon():
    with pytest.raises(InvalidParams):
        SimConfig(n_runs=0)
    assert default_horizon(MAINTENANCE_NOISY) == pytest.approx(50 / 0.5)
