"""Property-based checks on the closed forms, the engine and the simulator."""

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from inspection_timing import (PERFECT, AlwaysWork, DelayedExponential, DiscreteGap, Exponential,
                               ModelParams, Periodic, ShirkThenWork, Step, WorkThenShirk, derive,
                               effective_discount, expected_payoff, passage_probability,
                               u_shirk_work, u_work_shirk)
from inspection_timing.sim import SimConfig, estimate

rates = st.floats(0.5, 3.5)  # at least r = 0.5
values = st.floats(0.3, 3.0)
times = st.floats(0.0, 3.0)
deltas = st.one_of(st.just(PERFECT), st.floats(0.3, 8.0))
SETTINGS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def params(draw, rho=False):
    return ModelParams.from_derived(draw(rates), draw(rates), draw(values), draw(values),
                                    draw(deltas) if not rho else draw(st.floats(0.3, 8.0)),
                                    rho=draw(st.floats(0.0, 2.0)) if rho else 0.0)


@st.composite
def steps(draw):
    n = draw(st.integers(0, 4))
    bps = sorted(set(draw(st.lists(st.floats(0.01, 3.0), min_size=n, max_size=n))))
    acts = draw(st.lists(st.integers(0, 1), min_size=len(bps) + 1, max_size=len(bps) + 1))
    return Step(tuple(bps), tuple(acts))


@SETTINGS
@given(params(), steps(), times, times)
def test_effective_discount_is_multiplicative(p, s, t, extra):
    d = derive(p)
    whole = effective_discount(s, t + extra, d)
    split = effective_discount(s, t, d) * effective_discount(s.shifted(t), extra, d)
    assert whole == pytest.approx(split, rel=1e-12, abs=1e-300)


@SETTINGS
@given(st.floats(0.01, 1.5), st.floats(0.0, 1.5), st.floats(0.3, 8.0))
def test_passage_depends_only_on_total_shirking(a, b, delta):
    # without recovery the order of shirking and working does not matter
    t = a + b + 1.0
    first = Step((a,), (0, 1))
    late = Step((1.0, 1.0 + a), (1, 0, 1))
    assert passage_probability(first, t, delta) == pytest.approx(passage_probability(late, t, delta),
                                                                 rel=1e-12)
    assert passage_probability(first, t, delta) == pytest.approx(math.exp(-delta * a), rel=1e-12)


@SETTINGS
@given(params(rho=True), st.floats(0.0, 2.0), st.floats(0.05, 2.0))
def test_engine_matches_shirk_work_closed_form(p, t, tau):
    d = derive(p)
    exact = u_shirk_work(t, tau, d, p.delta, p.rho)
    assert expected_payoff(ShirkThenWork(t), Periodic(tau), p) == pytest.approx(exact, abs=1e-12)


@SETTINGS
@given(params(), st.floats(0.0, 2.0), st.floats(0.05, 2.0))
def test_engine_matches_work_shirk_closed_form(p, t, tau):
    d = derive(p)
    exact = u_work_shirk(t, tau, d, p.delta)
    assert expected_payoff(WorkThenShirk(t), Periodic(tau), p) == pytest.approx(exact, abs=1e-12)


@SETTINGS
@given(params(), steps(), st.floats(0.1, 3.0))
def test_discrete_gap_with_one_atom_is_periodic(p, s, tau):
    a = expected_payoff(s, Periodic(tau), p)
    b = expected_payoff(s, DiscreteGap((tau,), (1.0,)), p)
    assert a == pytest.approx(b, abs=1e-13)


@SETTINGS
@given(params(), st.floats(0.1, 3.0))
def test_delayed_exponential_limits(p, gamma):
    # zero window and no atom is the memoryless schedule
    s = ShirkThenWork(0.4)
    a = expected_payoff(s, DelayedExponential(0.0, 0.0, gamma), p)
    b = expected_payoff(s, Exponential(gamma), p)
    assert a == pytest.approx(b, abs=1e-13)


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 2**63 - 1), st.integers(1, 4))
def test_sim_order_independent(seed, workers):
    p = ModelParams.from_derived(2.0, 1.0, 2.0, 1.25, 5.0)
    base = estimate(Periodic(0.6), ShirkThenWork(0.2), p, SimConfig(n_runs=700, seed=seed))
    other = estimate(Periodic(0.6), ShirkThenWork(0.2), p,
                     SimConfig(n_runs=700, seed=seed, chunk=97, workers=workers))
    assert base.to_dict() == other.to_dict()
