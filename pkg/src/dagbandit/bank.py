"""Per-player bank of Tsallis-INF learners keyed by the observed parent actions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .tsallis import TsallisINF, loss_update


class ProtocolError(RuntimeError):
    """A learner was driven out of the act-then-update round order."""


ContextKey = tuple  # tuple of parent arm indices, parents in ascending player order


def context_index(parent_actions: Sequence[int], parent_sizes: Sequence[int]) -> int:
    """Mixed-radix index of a parent joint action, first parent most significant.

    >>> context_index((1, 2), (3, 4))
    6
    """
    if len(parent_actions) != len(parent_sizes):
        raise ValueError(
            f"arity mismatch: {len(parent_actions)} actions for {len(parent_sizes)} parents"
        )
    index = 0
    for action, size in zip(parent_actions, parent_sizes):
        if not 0 <= action < size:
            raise ValueError(f"parent action {action} out of range [0, {size})")
        index = index * size + action
    return index


@dataclass
class Pending:
    key: ContextKey
    arm: int
    prob: float


class LearnerBank:
    """Contextual Tsallis-INF learner for one player.

    One independent :class:`TsallisINF` per distinct parent joint action,
    created the first time that context is observed. Each context keeps its
    own activation counter, so its learning rate depends on how often that
    context has been seen, not on global time.
    """

    def __init__(self, player: int, n_arms: int, parent_sizes: Sequence[int] = ()):
        if n_arms < 1:
            raise ValueError(f"player {player}: n_arms must be >= 1")
        self.player = player
        self.n_arms = n_arms
        self.parent_sizes = tuple(parent_sizes)
        self.contexts: dict[ContextKey, TsallisINF] = {}
        self.pending: Pending | None = None

    def _check_key(self, key: ContextKey) -> None:
        if len(key) != len(self.parent_sizes):
            raise ValueError(
                f"player {self.player}: context key {key} has arity {len(key)}, "
                f"expected {len(self.parent_sizes)}"
            )
        for a, size in zip(key, self.parent_sizes):
            if not 0 <= a < size:
                raise ValueError(f"player {self.player}: context key {key} out of range")

    def learner(self, key: ContextKey) -> TsallisINF:
        learner = self.contexts.get(key)
        if learner is None:
            self._check_key(key)
            learner = self.contexts[key] = TsallisINF(self.n_arms)
        return learner

    def act(self, key: ContextKey, rng: np.random.Generator) -> int:
        if self.pending is not None:
            raise ProtocolError(f"player {self.player}: act() called twice without update()")
        key = tuple(key)
        arm, prob = self.learner(key).act(rng)
        self.pending = Pending(key, arm, prob)
        return arm

    def update(self, reward: float) -> None:
        pending = self.pending
        if pending is None:
            raise ProtocolError(f"player {self.player}: update() without a pending act()")
        loss_update(self.contexts[pending.key].losses, pending.arm, reward, pending.prob)
        self.pending = None

    def strategy(self, key: ContextKey) -> np.ndarray | None:
        """Last strategy played under ``key``, or None if the context is unseen."""
        learner = self.contexts.get(tuple(key))
        if learner is None or learner.probs is None:
            return None
        return np.array(learner.probs)

    @property
    def total_activations(self) -> int:
        return sum(learner.n for learner in self.contexts.values())
