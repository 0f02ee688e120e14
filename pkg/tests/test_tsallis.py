import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dagbandit.tsallis import (
    TsallisINF,
    learning_rate,
    loss_update,
    newton_fixed_point,
    sample_arm,
    solve_fixed_point,
    tsallis_weights,
)
from oracles import bisection_fixed_point


@pytest.mark.parametrize("t, eta", [(1, 2.0), (4, 1.0), (100, 0.2)])
def test_learning_rate(t, eta):
    assert learning_rate(t) == pytest.approx(eta, abs=1e-15)


def test_learning_rate_rejects_zero():
    with pytest.raises(ValueError):
        learning_rate(0)


@pytest.mark.parametrize(
    "losses, x, eta, expected",
    [
        ((0, 0), -2, 2, (0.25, 0.25)),
        ((0, 0, 0), -math.sqrt(3), 2, (1 / 3, 1 / 3, 1 / 3)),
        ((0, 1), -1, 1, (4, 1)),
    ],
)
def test_tsallis_weights(losses, x, eta, expected):
    np.testing.assert_allclose(tsallis_weights(losses, x, eta), expected, rtol=1e-12)


def test_tsallis_weights_rejects_bad_warm_start():
    with pytest.raises(ValueError):
        tsallis_weights([0.0, 1.0], 0.0, 1.0)
    with pytest.raises(ValueError):
        tsallis_weights([0.0, 1.0], -1.0, 0.0)


@pytest.mark.parametrize("x_init", [0.0, -1.0, -100.0, 5.0])
def test_solve_uniform_three_arms(x_init):
    probs, x = solve_fixed_point([0, 0, 0], 2.0, x_init)
    np.testing.assert_allclose(probs, [1 / 3] * 3, atol=1e-9)
    assert x == pytest.approx(-math.sqrt(3), abs=1e-6)


def test_solve_uniform_four_arms():
    probs, x = solve_fixed_point([0, 0, 0, 0], 1.0)
    np.testing.assert_allclose(probs, [0.25] * 4, atol=1e-9)
    assert x == pytest.approx(-4.0, abs=1e-6)


def test_solve_matches_bisection_oracle():
    losses, eta = [0.0, 3.0, 7.0], 2 / math.sqrt(10)
    probs, x = solve_fixed_point(losses, eta)
    x_ref, p_ref = bisection_fixed_point(losses, eta)
    assert x == pytest.approx(x_ref, abs=1e-6)
    np.testing.assert_allclose(probs, p_ref, atol=1e-6)
    assert abs(probs.sum() - 1) <= 1e-9
    assert x < min(losses)


def test_solve_is_deterministic():
    a = solve_fixed_point([1.0, 2.5, 0.3], 0.7, -3.0)
    b = solve_fixed_point([1.0, 2.5, 0.3], 0.7, -3.0)
    assert a[1] == b[1] and np.array_equal(a[0], b[0])


def test_single_arm_is_certain():
    probs, x = solve_fixed_point([4.0], 0.5)
    assert probs[0] == pytest.approx(1.0, abs=1e-9)
    assert x < 4.0


def test_solver_handles_huge_spread():
    # one arm far ahead of the rest: Newton starts far from the root
    losses = [0.0] + [1e6] * 63
    probs, x = solve_fixed_point(losses, 0.2)
    assert abs(probs.sum() - 1) <= 1e-9
    assert np.all(probs > 0)
    x_ref, _ = bisection_fixed_point(losses, 0.2)
    assert x == pytest.approx(x_ref, abs=1e-6)


loss_vectors = st.integers(2, 64).flatmap(
    lambda n: st.lists(st.floats(0, 100, allow_nan=False), min_size=n, max_size=n)
)
etas = st.sampled_from([2.0, 1.0, 0.2, 0.05])


@settings(max_examples=200, deadline=None)
@given(loss_vectors, etas)
def test_normalisation_and_oracle(losses, eta):
    probs, x = solve_fixed_point(losses, eta)
    assert abs(probs.sum() - 1) <= 1e-9
    assert np.all(probs > 0)
    assert x < min(losses)
    x_ref, _ = bisection_fixed_point(losses, eta)
    assert x == pytest.approx(x_ref, abs=1e-6)


@settings(max_examples=100, deadline=None)
@given(loss_vectors, etas, st.randoms(use_true_random=False))
def test_permutation_symmetry(losses, eta, rnd):
    perm = list(range(len(losses)))
    rnd.shuffle(perm)
    probs, _ = solve_fixed_point(losses, eta)
    probs_perm, _ = solve_fixed_point([losses[i] for i in perm], eta)
    np.testing.assert_allclose(probs_perm, probs[perm], atol=1e-9)


@settings(max_examples=100, deadline=None)
@given(loss_vectors, etas, st.floats(1e-3, 50), st.data())
def test_raising_one_loss_never_raises_its_probability(losses, eta, bump, data):
    j = data.draw(st.integers(0, len(losses) - 1))
    before, _ = solve_fixed_point(losses, eta)
    bumped = list(losses)
    bumped[j] += bump
    after, _ = solve_fixed_point(bumped, eta)
    assert after[j] <= before[j] + 1e-9


@settings(max_examples=100, deadline=None)
@given(loss_vectors, etas)
def test_warm_start_idempotence(losses, eta):
    probs, x, _ = newton_fixed_point(losses, eta, 0.0)
    probs2, x2, iters = newton_fixed_point(losses, eta, x)
    assert iters <= 2
    np.testing.assert_allclose(probs2, probs, atol=1e-9)


@pytest.mark.parametrize(
    "losses, arm, reward, p, expected",
    [
        ([0.0, 0.0], 0, 1.0, 0.5, [0.0, 0.0]),
        ([0.0, 0.0], 1, 0.25, 0.5, [0.0, 1.5]),
        ([2.0, 0.0, 0.0], 0, 0.0, 1 / 3, [5.0, 0.0, 0.0]),
    ],
)
def test_loss_update(losses, arm, reward, p, expected):
    assert loss_update(losses, arm, reward, p) == pytest.approx(expected)


@pytest.mark.parametrize("reward, p", [(1.5, 0.5), (-0.1, 0.5), (0.5, 0.0), (0.5, -1.0)])
def test_loss_update_rejects(reward, p):
    with pytest.raises(ValueError):
        loss_update([0.0, 0.0], 0, reward, p)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0.01, 1), min_size=2, max_size=8), st.floats(0, 1))
def test_loss_estimate_unbiased_by_enumeration(weights, reward):
    p = np.array(weights) / sum(weights)
    n = len(p)
    for k in range(n):
        expected_increment = 0.0
        for a in range(n):
            L = [0.0] * n
            loss_update(L, a, reward, p[a])
            expected_increment += p[a] * L[k]
        assert expected_increment == pytest.approx(1 - reward, abs=1e-12)


def test_sample_arm_inverse_cdf():
    probs = [0.2, 0.5, 0.3]
    assert sample_arm(probs, 0.0) == 0
    assert sample_arm(probs, 0.19) == 0
    assert sample_arm(probs, 0.2) == 1
    assert sample_arm(probs, 0.69) == 1
    assert sample_arm(probs, 0.7) == 2
    assert sample_arm(probs, 0.999999) == 2


def test_learner_converges_to_rewarding_arm():
    rng = np.random.default_rng(3)
    learner = TsallisINF(3)
    for _ in range(100):
        arm, p = learner.act(rng)
        learner.update(arm, 1.0 if arm == 0 else 0.0, p)
    assert learner.strategy()[0] > 0.9
