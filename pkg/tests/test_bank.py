import copy

import numpy as np
import pytest
from scipy import stats

from dagbandit.bank import LearnerBank, ProtocolError, context_index
from dagbandit.tsallis import learning_rate
from oracles import scripted_tsallis_run


@pytest.mark.parametrize(
    "actions, sizes, index",
    [((), (), 0), ((1, 2), (3, 4), 6), ((2, 0, 1), (3, 2, 2), 9)],
)
def test_context_index(actions, sizes, index):
    assert context_index(actions, sizes) == index


def test_context_index_is_a_bijection():
    sizes = (3, 2, 4)
    seen = {
        context_index((a, b, c), sizes)
        for a in range(3)
        for b in range(2)
        for c in range(4)
    }
    assert seen == set(range(24))


def test_context_index_rejects_out_of_range():
    with pytest.raises(ValueError):
        context_index((3,), (3,))
    with pytest.raises(ValueError):
        context_index((0, 1), (3,))


def test_fresh_bank_samples_uniformly():
    rng = np.random.default_rng(11)
    counts = np.zeros(3)
    for _ in range(10_000):
        bank = LearnerBank(0, 3)
        counts[bank.act((), rng)] += 1
    assert stats.chisquare(counts).pvalue > 0.001


def test_contexts_are_isolated():
    rng = np.random.default_rng(0)
    bank = LearnerBank(1, 3, parent_sizes=(2,))
    bank.act((0,), rng)
    bank.update(0.0)
    before = copy.deepcopy(bank.contexts[(0,)].__dict__)
    for _ in range(20):
        bank.act((1,), rng)
        bank.update(0.3)
    assert bank.contexts[(0,)].__dict__ == before
    assert bank.contexts[(1,)].n == 20


@pytest.mark.parametrize("reward, prob, increment", [(1.0, 0.5, 0.0), (0.0, 0.25, 4.0), (0.5, 0.5, 1.0)])
def test_update_applies_importance_weight(reward, prob, increment):
    bank = LearnerBank(0, 2)
    bank.act((), np.random.default_rng(0))
    arm = bank.pending.arm
    bank.pending.prob = prob
    bank.update(reward)
    assert bank.contexts[()].losses[arm] == pytest.approx(increment)
    assert bank.pending is None


def test_protocol_violations():
    bank = LearnerBank(0, 2)
    rng = np.random.default_rng(0)
    with pytest.raises(ProtocolError):
        bank.update(0.5)
    bank.act((), rng)
    with pytest.raises(ProtocolError):
        bank.act((), rng)


def test_malformed_key_rejected():
    bank = LearnerBank(2, 2, parent_sizes=(3, 2))
    with pytest.raises(ValueError):
        bank.act((0,), np.random.default_rng(0))
    with pytest.raises(ValueError):
        bank.act((0, 2), np.random.default_rng(0))


def test_per_context_learning_rate(monkeypatch):
    seen = []
    import dagbandit.tsallis as ts

    real = ts.newton_fixed_point

    def spy(losses, eta, x):
        seen.append(eta)
        return real(losses, eta, x)

    monkeypatch.setattr(ts, "newton_fixed_point", spy)
    bank = LearnerBank(0, 2, parent_sizes=(2,))
    rng = np.random.default_rng(5)
    keys = [(0,), (1,), (1,), (0,), (1,)]
    for key in keys:
        bank.act(key, rng)
        bank.update(0.5)
    # activations per context: 1, 1, 2, 2, 3
    assert seen == [learning_rate(m) for m in (1, 1, 2, 2, 3)]
    assert bank.total_activations == len(keys)


def test_convergence_matches_scripted_learner():
    reward = lambda arm: 1.0 if arm == 0 else 0.0
    bank = LearnerBank(0, 3)
    rng = np.random.default_rng(42)
    played = []
    for _ in range(100):
        arm = bank.act((), rng)
        played.append(arm)
        bank.update(reward(arm))
    scripted, scripted_probs = scripted_tsallis_run(reward, 3, 100, np.random.default_rng(42))
    assert bank.strategy(())[0] > 0.9
    assert scripted_probs[0] > 0.9
    assert played == scripted


def test_determinism():
    def run(seed):
        bank = LearnerBank(0, 4, parent_sizes=(3,))
        rng = np.random.default_rng(seed)
        out = []
        for t in range(200):
            out.append(bank.act((t % 3,), rng))
            bank.update((t * 7 % 10) / 10)
        return out

    assert run(9) == run(9)
