"""Single-context Tsallis-INF learner (1/2-Tsallis regularised online mirror descent).

The strategy over ``A`` arms at round ``t`` is

    p_j = 4 / (eta * (L_j - x))**2,    eta = 2 / sqrt(t),

where ``L`` are cumulative importance-weighted losses and ``x < min(L)`` is the
normalisation point making the ``p_j`` sum to one. ``x`` is found by Newton's
method warm-started from the previous round's value, guarded by a bracket and
a bisection fallback.

Hot-path functions work on plain Python sequences: arm counts here are small
and per-element Python arithmetic beats numpy's call overhead.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

SUM_TOL = 1e-9
MAX_NEWTON = 50
BISECT_WIDTH = 1e-12
WARM_START_DELTA = 1e-12


def learning_rate(t: int) -> float:
    """Learning rate ``2 * sqrt(1/t)`` for the ``t``-th activation (t >= 1)."""
    if t < 1:
        raise ValueError(f"round counter must be >= 1, got {t}")
    return 2.0 * math.sqrt(1.0 / t)


def tsallis_weights(losses: Sequence[float], x: float, eta: float) -> np.ndarray:
    """Unnormalised weights ``4 / (eta * (L_j - x))**2``.

    Raises ``ValueError`` if ``eta <= 0`` or some ``L_j <= x``; the latter means
    the warm start is invalid and the caller must re-initialise ``x``.
    """
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    losses = np.asarray(losses, dtype=float)
    gaps = losses - x
    if np.any(gaps <= 0):
        raise ValueError(f"fixed point x={x} is not below min loss {losses.min()}")
    return 4.0 / (eta * gaps) ** 2


def _weights_and_slope(losses, x, eta):
    # returns (weights, sum of weights, sum of weights**1.5)
    probs = []
    total = 0.0
    total32 = 0.0
    for loss in losses:
        d = eta * (loss - x)
        p = 4.0 / (d * d)
        probs.append(p)
        total += p
        total32 += 8.0 / (d * d * d)
    return probs, total, total32


def _bisect(losses, eta, lo, hi):
    # f(lo) <= 0 < f(hi) side; hi may be min(L) itself (f -> +inf there)
    while hi - lo > BISECT_WIDTH:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        total = 0.0
        for loss in losses:
            d = eta * (loss - mid)
            total += 4.0 / (d * d)
        if total > 1.0:
            hi = mid
        else:
            lo = mid
    return lo


def newton_fixed_point(
    losses: Sequence[float], eta: float, x_init: float
) -> tuple[list[float], float, int]:
    """Solve ``sum_j 4/(eta(L_j - x))^2 = 1`` for ``x < min(L)``.

    Returns ``(probs, x, newton_iterations)``. The iteration count is exposed
    for warm-start diagnostics; ``solve_fixed_point`` is the public entry point.
    """
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    n_arms = len(losses)
    if n_arms < 1:
        raise ValueError("need at least one arm")
    min_loss = min(losses)
    if not math.isfinite(min_loss) or not all(math.isfinite(v) for v in losses):
        raise ValueError("losses must be finite")

    x = x_init
    if not x < min_loss - WARM_START_DELTA:
        x = min_loss - 2.0 * math.sqrt(n_arms) / eta

    # sum of weights is strictly increasing and convex in x on (-inf, min L)
    lo, hi = -math.inf, min_loss
    for it in range(MAX_NEWTON):
        probs, total, total32 = _weights_and_slope(losses, x, eta)
        excess = total - 1.0
        if abs(excess) <= SUM_TOL:
            return probs, x, it
        if excess < 0:
            lo = x
        else:
            hi = x
        x_new = x - excess / (eta * total32)
        if not lo < x_new < hi:
            # only reachable from the left of the root, so lo is finite
            x_new = 0.5 * (lo + hi)
        x = x_new

    if lo == -math.inf:
        lo = min_loss - 2.0 * math.sqrt(n_arms) / eta
    x = _bisect(losses, eta, lo, hi)
    probs, total, _ = _weights_and_slope(losses, x, eta)
    if abs(total - 1.0) > SUM_TOL:
        probs = [p / total for p in probs]
    return probs, x, MAX_NEWTON


def solve_fixed_point(
    losses: Sequence[float], eta: float, x_init: float = 0.0
) -> tuple[np.ndarray, float]:
    """Strategy and normalisation point for cumulative losses ``losses``.

    The returned probabilities are strictly positive and sum to one within
    ``1e-9``; the returned ``x`` lies strictly below ``min(losses)``.
    """
    probs, x, _ = newton_fixed_point(list(map(float, losses)), eta, x_init)
    return np.array(probs), x


def loss_update(
    losses: np.ndarray | list[float], arm: int, reward: float, p_arm: float
) -> np.ndarray | list[float]:
    """Add the importance-weighted loss ``(1 - reward) / p_arm`` to ``losses[arm]`` in place."""
    if not 0.0 <= reward <= 1.0:
        raise ValueError(f"reward must lie in [0, 1], got {reward}")
    if not 0.0 < p_arm <= 1.0:
        raise ValueError(f"p_arm must lie in (0, 1], got {p_arm}")
    if not 0 <= arm < len(losses):
        raise IndexError(f"arm {arm} out of range for {len(losses)} arms")
    losses[arm] += (1.0 - reward) / p_arm
    return losses


def sample_arm(probs: Sequence[float], u: float) -> int:
    """Inverse-CDF draw: the first arm whose cumulative mass exceeds ``u * sum(probs)``."""
    target = u * sum(probs)
    acc = 0.0
    for arm, p in enumerate(probs):
        acc += p
        if target < acc:
            return arm
    return len(probs) - 1


class TsallisINF:
    """One Tsallis-INF bandit learner over ``n_arms`` arms.

    ``strategy()`` advances the activation counter and recomputes the mixed
    strategy; ``update()`` feeds back the reward of the arm that was played.
    """

    def __init__(self, n_arms: int):
        if n_arms < 1:
            raise ValueError(f"n_arms must be >= 1, got {n_arms}")
        self.n_arms = n_arms
        self.losses = [0.0] * n_arms
        self.x = 0.0
        self.n = 0
        self.probs: list[float] | None = None

    def strategy(self) -> list[float]:
        self.n += 1
        probs, self.x, _ = newton_fixed_point(self.losses, learning_rate(self.n), self.x)
        self.probs = probs
        return probs

    def act(self, rng: np.random.Generator) -> tuple[int, float]:
        """Compute a fresh strategy, draw one arm; returns ``(arm, p_arm)``."""
        probs = self.strategy()
        arm = sample_arm(probs, rng.random())
        # a lone arm can come out at 1 + O(1e-16)
        return arm, min(probs[arm], 1.0)

    def update(self, arm: int, reward: float, p_arm: float) -> None:
        loss_update(self.losses, arm, reward, p_arm)
