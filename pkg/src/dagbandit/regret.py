"""Joint pseudo-regret estimation and closed-form regret bounds."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .game import Environment, GameGraph, Trajectory

DEFAULT_ORACLE_CAP = 10**6


class OracleCapExceeded(ValueError):
    pass


def log_checkpoints(horizon: int) -> list[int]:
    """Rounds ``{1, 2, 5} * 10**k`` up to ``horizon``, always ending at ``horizon``."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    points = set()
    scale = 1
    while scale <= horizon:
        for m in (1, 2, 5):
            if m * scale <= horizon:
                points.add(m * scale)
        scale *= 10
    points.add(horizon)
    return sorted(points)


def _check_checkpoints(checkpoints, horizon):
    checkpoints = sorted(set(int(c) for c in checkpoints))
    if not checkpoints or checkpoints[0] < 1 or checkpoints[-1] > horizon:
        raise ValueError(f"checkpoints must lie in [1, {horizon}]")
    return checkpoints


# -- bounds -----------------------------------------------------------------

def bound_single(n_arms: int, horizon: int) -> float:
    """Single-player Tsallis-INF pseudo-regret bound ``4 sqrt(A T) + 1``."""
    return 4 * math.sqrt(n_arms * horizon) + 1


def bound_two(a1: int, a2: int, horizon: int) -> float:
    """Leader/follower clique bound ``4 sqrt(A1 A2 T) + 4 sqrt(A1 T) + A1 + 1``."""
    return 4 * math.sqrt(a1 * a2 * horizon) + 4 * math.sqrt(a1 * horizon) + a1 + 1


def bound_clique(sizes: Sequence[int], horizon: int) -> float:
    """Bound for one clique whose members observe each other in the order of ``sizes``.

    ``4 sqrt(T) sum_i prod_{k<=i} sqrt(A_k) + sum_{i<m} prod_{k<=i} A_k + 1``.
    The square-root term is evaluated as ``sqrt(T * prod A_k)`` so that the
    one- and two-player cases coincide bit for bit with ``bound_single`` and
    ``bound_two``.
    """
    if len(sizes) < 1:
        raise ValueError("a clique has at least one player")
    roots = 0.0
    products = 0
    prefix = 1
    for i, a in enumerate(sizes):
        prefix *= int(a)
        roots += math.sqrt(prefix * horizon)
        if i < len(sizes) - 1:
            products += prefix
    return 4 * roots + products + 1


def bound_dag(cliques: Sequence[Sequence[int]], weights: Sequence[float], horizon: int) -> float:
    """Weighted sum of per-clique bounds over disjoint cliques."""
    if len(cliques) != len(weights):
        raise ValueError("one weight per clique is required")
    if any(b < 0 for b in weights) or abs(sum(weights) - 1.0) > 1e-12:
        raise ValueError("weights must be non-negative and sum to 1")
    return sum(b * bound_clique(sizes, horizon) for sizes, b in zip(cliques, weights))


# -- oracle -----------------------------------------------------------------

@dataclass
class OracleResult:
    best_action: tuple
    best_value: float  # mean cumulative reward of best_action over the full horizon
    values: dict  # joint action -> mean cumulative reward over the full horizon
    checkpoints: list
    best_curve: np.ndarray  # per checkpoint t: max over joint actions of mean cumulative reward to t

    @property
    def horizon(self) -> int:
        return self.checkpoints[-1]


def best_pure_joint_action(
    env_factory: Callable[[], Environment],
    graph: GameGraph,
    horizon: int,
    replay_seeds: Sequence = (0,),
    checkpoints: Sequence[int] | None = None,
    cap: int = DEFAULT_ORACLE_CAP,
    expected: bool = False,
) -> OracleResult:
    """Brute-force the best constant joint action by replaying the environment.

    Every joint action is held fixed for ``horizon`` rounds under each replay
    seed and its cumulative reward is averaged over seeds. With
    ``expected=True`` and an environment that exposes ``expected_reward``, the
    exact mean rewards are summed instead and the seeds are ignored.
    Ties go to the lowest mixed-radix index (first player most significant).
    """
    n_joint = graph.joint_size
    if n_joint > cap:
        raise OracleCapExceeded(
            f"joint action space has {n_joint} actions, above the oracle cap of {cap}"
        )
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    checkpoints = _check_checkpoints(checkpoints or [horizon], horizon)
    if checkpoints[-1] != horizon:
        checkpoints.append(horizon)
    idx = np.asarray(checkpoints) - 1
    replay_seeds = list(replay_seeds)
    if not replay_seeds:
        raise ValueError("at least one replay seed is required")

    env = env_factory()
    use_expected = expected and env.has_expected
    best_action, best_value = None, -math.inf
    best_curve = np.full(len(checkpoints), -math.inf)
    values = {}
    rounds = np.arange(1, horizon + 1)
    for action in itertools.product(*(range(a) for a in graph.action_sizes)):
        if use_expected:
            curve = np.cumsum([env.expected_reward(t, action) for t in rounds])[idx]
        else:
            curve = np.zeros(len(checkpoints))
            for seed in replay_seeds:
                curve += np.cumsum(env.replay(action, horizon, seed))[idx]
            curve /= len(replay_seeds)
        value = float(curve[-1])
        values[action] = value
        if value > best_value:
            best_action, best_value = action, value
        np.maximum(best_curve, curve, out=best_curve)
    return OracleResult(best_action, best_value, values, checkpoints, best_curve)


# -- pseudo-regret ----------------------------------------------------------

@dataclass
class RegretReport:
    checkpoints: np.ndarray
    regret: np.ndarray  # cross-seed mean cumulative pseudo-regret
    std: np.ndarray  # cross-seed standard deviation of the per-seed regret
    bound: np.ndarray  # theoretical bound at each checkpoint (nan if none given)
    n_seeds: int

    @property
    def average(self) -> np.ndarray:
        return self.regret / self.checkpoints

    @property
    def lo(self) -> np.ndarray:
        return self.regret - 2 * self.std

    @property
    def hi(self) -> np.ndarray:
        return self.regret + 2 * self.std

    def rows(self, average: bool = False) -> list[tuple]:
        """``(T, regret, lo, hi, bound)`` per checkpoint, optionally divided by T."""
        scale = self.checkpoints.astype(float) if average else np.ones(len(self.checkpoints))
        return [
            (int(t), r / s, lo / s, hi / s, b / s)
            for t, r, lo, hi, b, s in zip(
                self.checkpoints, self.regret, self.lo, self.hi, self.bound, scale
            )
        ]


def pseudo_regret(
    trajectories: Sequence[Trajectory],
    oracle: OracleResult,
    bound: Callable[[int], float] | None = None,
    use_expected: bool = True,
) -> RegretReport:
    """Cross-seed pseudo-regret ``r*(t) - sum_{u<=t} r_u`` at the oracle's checkpoints.

    ``r*(t)`` is the best constant joint action's mean cumulative reward up to
    ``t``. When every trajectory carries conditional mean rewards and
    ``use_expected`` is set, those replace the realised rewards (same
    expectation, less variance).
    """
    if not trajectories:
        raise ValueError("no trajectories given")
    lengths = {len(tr) for tr in trajectories}
    if len(lengths) != 1:
        raise ValueError(f"trajectories have mismatched lengths {sorted(lengths)}")
    (horizon,) = lengths
    if horizon != oracle.horizon:
        raise ValueError(f"trajectories have length {horizon}, oracle horizon is {oracle.horizon}")
    idx = np.asarray(oracle.checkpoints) - 1
    expected = use_expected and all(tr.expected is not None for tr in trajectories)
    curves = [np.cumsum(tr.expected if expected else tr.rewards)[idx] for tr in trajectories]
    return regret_from_curves(np.array(curves), oracle, bound)


def regret_from_curves(
    curves: np.ndarray, oracle: OracleResult, bound: Callable[[int], float] | None = None
) -> RegretReport:
    """Report from per-seed cumulative rewards already sampled at the oracle's checkpoints."""
    curves = np.atleast_2d(np.asarray(curves, dtype=float))
    checkpoints = np.asarray(oracle.checkpoints)
    if curves.shape[1] != len(checkpoints):
        raise ValueError(f"{curves.shape[1]} curve points for {len(checkpoints)} checkpoints")
    per_seed = oracle.best_curve - curves
    n = len(curves)
    mean = per_seed.mean(axis=0)
    std = per_seed.std(axis=0, ddof=1) if n > 1 else np.zeros(len(checkpoints))
    bounds = np.array([bound(int(t)) if bound else math.nan for t in checkpoints])
    return RegretReport(checkpoints, mean, std, bounds, n)
