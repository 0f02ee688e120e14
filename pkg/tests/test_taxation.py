import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dagbandit.taxation import (
    TaxationEnv,
    TaxParams,
    build_experiment,
    collected_tax,
    worker_utility,
)

BOUNDS = (14.0,)


@pytest.mark.parametrize(
    "income, rates, tax",
    [(0.0, (0.1, 0.3), 0.0), (10.0, (0.1, 0.3), 1.0), (20.0, (0.1, 0.3), 3.2), (15.0, (0.5, 0.5), 7.5)],
)
def test_collected_tax(income, rates, tax):
    assert collected_tax(income, BOUNDS, rates) == pytest.approx(tax, abs=1e-12)


def test_tax_at_boundary():
    assert collected_tax(14.0, BOUNDS, (0.1, 0.3)) == pytest.approx(1.4)


@given(
    st.floats(0, 200),
    st.floats(0, 200),
    st.tuples(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1)),
    st.integers(0, 2),
    st.floats(0, 1),
)
def test_tax_monotone_and_bounded(x, dx, rates, k, bump):
    bounds = (10.0, 40.0)
    tax = collected_tax(x, bounds, rates)
    assert 0.0 <= tax <= x + 1e-12
    assert collected_tax(x + dx, bounds, rates) >= tax - 1e-12
    raised = list(rates)
    raised[k] = min(1.0, raised[k] + bump)
    assert collected_tax(x, bounds, raised) >= tax - 1e-12


def test_worker_utility():
    assert worker_utility(1.0, 3.5, 0.3) == pytest.approx(-3.5)
    assert worker_utility(10.0, 0.0, 0.3) == pytest.approx(5.7312, abs=1e-4)
    assert worker_utility(0.0, 2.0, 0.3) == pytest.approx(-1 / 0.7 - 2.0)


def test_utility_burn_out():
    # income 10 and labour 1 per round at skill 1: utility rises, then falls
    u = np.array([worker_utility(10.0 * n, 1.0 * n, 0.3) for n in range(1, 2000)])
    inc = np.diff(u)
    assert inc[0] > 0 and inc[-1] < 0
    assert np.sum(np.diff(np.sign(inc)) != 0) == 1


def test_build_experiment():
    ex = build_experiment()
    g = ex.graph
    assert g.action_sizes == (9, 3, 3, 3)
    assert g.joint_size == 243
    assert g.parents[3] == (0, 1, 2)
    assert g.parents[1] == (0,)
    p = ex.params
    assert p.worker_weight == pytest.approx(1 / 3) and p.tax_weight == 3.0
    assert p.n_workers * p.worker_weight + p.tax_weight == pytest.approx(4.0)
    assert p.skills == (1.0, 2.0, 3.0)
    assert p.rates(0) == (0.1, 0.1) and p.rates(8) == (0.5, 0.5) and p.rates(5) == (0.3, 0.5)
    assert ex.cliques == [[9, 3, 3, 3]]


def test_params_validation():
    with pytest.raises(ValueError, match="M\\*w"):
        TaxParams(worker_weight=0.5, tax_weight=3.0)
    with pytest.raises(ValueError, match="curvature"):
        TaxParams(curvature=1.0)
    with pytest.raises(ValueError, match="rates"):
        TaxParams(rate_grid=(0.1, 1.5))


def test_first_round_state():
    env = TaxationEnv()
    env.reset(None)
    r = env.step(1, (0, 0, 0, 0))
    assert env.z == pytest.approx([4.5, 4.5, 4.5])
    assert env.cum_labour == pytest.approx([1.0, 0.5, 1 / 3])
    assert 0.0 <= r <= 1.0


def test_max_rates_max_work_tax():
    env = TaxationEnv()
    assert env._tax[8][2] == pytest.approx(7.5)
    assert env.tax_max == pytest.approx(22.5)


def test_zero_rate_schedule():
    env = TaxationEnv(TaxParams(rate_grid=(0.0,)))
    env.reset(None)
    for t in range(1, 50):
        r = env.step(t, (0, 2, 1, 0))
        assert 0.0 <= r <= 1.0
    # with no tax the reward is the utility term alone
    assert env._c2 == 0.0


def test_budget_identity():
    env = TaxationEnv()
    env.reset(None)
    rng = np.random.default_rng(1)
    for t in range(1, 200):
        action = (int(rng.integers(9)),) + tuple(int(v) for v in rng.integers(3, size=3))
        z_before = list(env.z)
        env.step(t, action)
        for j in range(3):
            gross = 5.0 * (action[j + 1] + 1)
            tax = collected_tax(gross, BOUNDS, env.params.rates(action[0]))
            assert env.z[j] - z_before[j] + tax == pytest.approx(gross, abs=1e-9)


def test_rewards_in_unit_interval_random_histories():
    rng = np.random.default_rng(2)
    for _ in range(20):
        env = TaxationEnv()
        env.reset(None)
        for t in range(1, 500):
            action = (int(rng.integers(9)),) + tuple(int(v) for v in rng.integers(3, size=3))
            assert 0.0 <= env.step(t, action) <= 1.0


def test_normalisation_extremes():
    env = TaxationEnv()
    t = np.arange(1, 10**5 + 1)
    lo, hi = env.utility_bounds(t)
    # utilities of the extreme constant profiles lie inside the envelope
    for planner, level in [(0, 2), (8, 0), (8, 2), (0, 0)]:
        for j in range(3):
            z = t * (env.params.income(level) - env._tax[planner][level])
            u = (z**0.7 - 1) / 0.7 - t * env._labour[j][level]
            assert np.all(u >= lo - 1e-9) and np.all(u <= hi + 1e-9)
    for action in [(0, 0, 0, 0), (8, 2, 2, 2), (0, 2, 2, 2), (8, 0, 0, 0)]:
        r = env.replay(action, 10**5)
        assert r.min() >= 0.0 and r.max() <= 1.0


def test_replay_matches_step():
    env = TaxationEnv()
    for action in [(8, 2, 2, 2), (3, 0, 1, 2)]:
        fast = env.replay(action, 3000)
        env.reset(None)
        slow = np.array([env.step(t, action) for t in range(1, 3001)])
        np.testing.assert_allclose(fast, slow, rtol=0, atol=1e-12)


def test_environment_is_deterministic():
    rng = np.random.default_rng(4)
    actions = [(int(rng.integers(9)),) + tuple(int(v) for v in rng.integers(3, size=3)) for _ in range(300)]
    runs = []
    for seed in (1, 2):
        env = TaxationEnv()
        env.reset(seed)
        runs.append([env.step(t, a) for t, a in enumerate(actions, 1)])
    assert runs[0] == runs[1]


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 8), st.integers(0, 1), st.integers(0, 2))
def test_raising_a_rate_never_raises_net_income(planner, bracket, level):
    p = TaxParams()
    rates = list(p.rates(planner))
    idx = p.rate_grid.index(rates[bracket])
    if idx + 1 == len(p.rate_grid):
        return
    raised = list(rates)
    raised[bracket] = p.rate_grid[idx + 1]
    x = p.income(level)
    assert collected_tax(x, p.boundaries, raised) >= collected_tax(x, p.boundaries, rates)
    assert x - collected_tax(x, p.boundaries, raised) <= x - collected_tax(x, p.boundaries, rates)
