"""DAG game graphs, clique-structured rewards and the round engine.

Players are 0-indexed. An edge ``(j, i)`` means player ``i`` observes the
action of player ``j`` before choosing its own.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .bank import LearnerBank

JointAction = tuple


class GraphError(ValueError):
    pass


def substream(master_seed: int, *key: int) -> np.random.SeedSequence:
    """Independent seed sequence for ``key`` under ``master_seed``."""
    return np.random.SeedSequence(master_seed, spawn_key=tuple(key))


def player_rng(master_seed: int, run: int, player: int) -> np.random.Generator:
    return np.random.default_rng(substream(master_seed, run, player))


def env_seed(master_seed: int, run: int) -> np.random.SeedSequence:
    return substream(master_seed, run)


def _find_cycle(nodes: set[int], children: dict[int, list[int]]) -> list[int]:
    # every node left over by Kahn's algorithm has a predecessor inside the set,
    # so walking backwards must revisit a node
    parents = {v: [] for v in nodes}
    for u in nodes:
        for v in children[u]:
            if v in nodes:
                parents[v].append(u)
    node = min(nodes)
    seen: dict[int, int] = {}
    path = []
    while node not in seen:
        seen[node] = len(path)
        path.append(node)
        node = min(parents[node])
    cycle = path[seen[node]:]
    cycle.reverse()
    return cycle


def validate(n_players: int, edges: Iterable[tuple[int, int]]) -> list[int]:
    """Topological order (Kahn, lowest index first). Raises GraphError on bad graphs."""
    if n_players < 1:
        raise GraphError("a game needs at least one player")
    children: dict[int, list[int]] = {i: [] for i in range(n_players)}
    indegree = [0] * n_players
    seen = set()
    for edge in edges:
        j, i = edge
        if not (0 <= j < n_players and 0 <= i < n_players):
            raise GraphError(f"edge {edge} has an endpoint outside [0, {n_players})")
        if i == j:
            raise GraphError(f"self-loop on player {i}")
        if (j, i) in seen:
            raise GraphError(f"duplicate edge {edge}")
        seen.add((j, i))
        children[j].append(i)
        indegree[i] += 1

    ready = [i for i in range(n_players) if indegree[i] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        u = heapq.heappop(ready)
        order.append(u)
        for v in children[u]:
            indegree[v] -= 1
            if indegree[v] == 0:
                heapq.heappush(ready, v)
    if len(order) < n_players:
        cycle = _find_cycle(set(range(n_players)) - set(order), children)
        raise GraphError("cycle detected: " + " -> ".join(map(str, cycle + cycle[:1])))
    return order


@dataclass(frozen=True)
class GameGraph:
    n_players: int
    edges: frozenset
    action_sizes: tuple
    topo_order: tuple = field(init=False)
    parents: tuple = field(init=False)

    def __init__(self, n_players: int, edges: Iterable[tuple[int, int]], action_sizes: Sequence[int]):
        edges = [tuple(int(v) for v in e) for e in edges]
        order = validate(n_players, edges)
        if len(action_sizes) != n_players:
            raise GraphError(f"{len(action_sizes)} action sizes given for {n_players} players")
        if any(int(a) < 1 for a in action_sizes):
            raise GraphError("every action space needs at least one action")
        object.__setattr__(self, "n_players", n_players)
        object.__setattr__(self, "edges", frozenset(edges))
        object.__setattr__(self, "action_sizes", tuple(int(a) for a in action_sizes))
        object.__setattr__(self, "topo_order", tuple(order))
        parents = tuple(
            tuple(sorted(j for j, k in edges if k == i)) for i in range(n_players)
        )
        object.__setattr__(self, "parents", parents)

    def parent_sizes(self, player: int) -> tuple:
        return tuple(self.action_sizes[j] for j in self.parents[player])

    def connected(self, i: int, j: int) -> bool:
        return (i, j) in self.edges or (j, i) in self.edges

    @property
    def joint_size(self) -> int:
        return math.prod(self.action_sizes)

    def make_banks(self) -> list[LearnerBank]:
        return [LearnerBank(i, self.action_sizes[i], self.parent_sizes(i)) for i in range(self.n_players)]


def project(action: Sequence[int], clique: Iterable[int]) -> tuple:
    """Actions of the clique members, in ascending player order."""
    return tuple(action[i] for i in sorted(clique))


class TableReward:
    """Clique reward given by a table indexed by the clique's joint action.

    ``kind="bernoulli"`` draws a 0/1 reward with the table entry as mean and
    consumes one uniform per evaluation; ``kind="deterministic"`` returns the
    entry and consumes nothing.
    """

    def __init__(self, table, kind: str = "bernoulli"):
        self.table = np.asarray(table, dtype=float)
        if kind not in ("bernoulli", "deterministic"):
            raise ValueError(f"unknown table reward kind {kind!r}")
        if np.any((self.table < 0) | (self.table > 1)) or not np.all(np.isfinite(self.table)):
            raise ValueError("table entries must lie in [0, 1]")
        self.kind = kind

    def mean(self, clique_action: tuple, t: int) -> float:
        return float(self.table[clique_action])

    def __call__(self, clique_action: tuple, t: int, rng: np.random.Generator | None) -> float:
        m = self.table[clique_action]
        if self.kind == "deterministic":
            return float(m)
        return 1.0 if rng.random() < m else 0.0


Evaluator = Callable[[tuple, int, "np.random.Generator | None"], float]


@dataclass
class CliqueRewardSpec:
    cliques: list
    weights: list
    evaluators: list

    def __post_init__(self):
        self.cliques = [tuple(sorted(int(i) for i in c)) for c in self.cliques]
        self.weights = [float(b) for b in self.weights]
        errors = self.check()
        if errors:
            raise ValueError("; ".join(errors))

    def check(self, graph: GameGraph | None = None) -> list[str]:
        errors = []
        if not (len(self.cliques) == len(self.weights) == len(self.evaluators)):
            errors.append("cliques, weights and evaluators must have equal length")
        if not self.cliques:
            errors.append("at least one clique is required")
        if any(b < 0 for b in self.weights):
            errors.append("clique weights must be non-negative")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            errors.append(f"clique weights sum to {sum(self.weights)!r}, not 1")
        members = [i for c in self.cliques for i in c]
        if len(members) != len(set(members)):
            errors.append("cliques must be pairwise disjoint")
        if any(len(c) == 0 for c in self.cliques):
            errors.append("cliques must be non-empty")
        if graph is not None:
            for k, clique in enumerate(self.cliques):
                if any(not 0 <= i < graph.n_players for i in clique):
                    errors.append(f"clique {k} references a player outside the graph")
                    continue
                for a in range(len(clique)):
                    for b in range(a + 1, len(clique)):
                        if not graph.connected(clique[a], clique[b]):
                            errors.append(
                                f"clique {k}: players {clique[a]} and {clique[b]} are not adjacent"
                            )
        return errors

    def validate(self, graph: GameGraph) -> None:
        errors = self.check(graph)
        if errors:
            raise GraphError("; ".join(errors))


def compose_reward(
    spec: CliqueRewardSpec, action: Sequence[int], t: int, rng: np.random.Generator | None = None
) -> float:
    """Weighted sum of the clique rewards for joint action ``action``."""
    total = 0.0
    for k, (clique, beta, evaluator) in enumerate(zip(spec.cliques, spec.weights, spec.evaluators)):
        r = evaluator(tuple(action[i] for i in clique), t, rng)
        if not 0.0 <= r <= 1.0:
            raise ValueError(f"clique {k} reward {r!r} outside [0, 1] at round {t}")
        total += beta * r
    return min(total, 1.0)


class Environment:
    """Reward source for a game.

    Contract: after ``reset(seed)``, the sequence of rewards returned by
    ``step`` is a function of the seed and the actions played so far. That
    makes ``replay`` (hold one joint action fixed for T rounds) well defined.
    """

    def reset(self, seed) -> None:
        raise NotImplementedError

    def step(self, t: int, action: JointAction) -> float:
        raise NotImplementedError

    def replay(self, action: JointAction, horizon: int, seed) -> np.ndarray:
        self.reset(seed)
        action = tuple(action)
        return np.array([self.step(t, action) for t in range(1, horizon + 1)])

    def expected_reward(self, t: int, action: JointAction) -> float:
        """Mean reward of ``action`` at round ``t``; only for history-free environments."""
        raise NotImplementedError

    @property
    def has_expected(self) -> bool:
        return False


class CliqueEnvironment(Environment):
    """History-free environment whose reward is ``compose_reward`` of a clique spec."""

    def __init__(self, spec: CliqueRewardSpec):
        self.spec = spec
        self.rng = np.random.default_rng(0)

    def reset(self, seed) -> None:
        self.rng = np.random.default_rng(seed)

    def step(self, t: int, action: JointAction) -> float:
        return compose_reward(self.spec, action, t, self.rng)

    @property
    def has_expected(self) -> bool:
        return all(hasattr(ev, "mean") for ev in self.spec.evaluators)

    def expected_reward(self, t: int, action: JointAction) -> float:
        return sum(
            beta * ev.mean(tuple(action[i] for i in clique), t)
            for clique, beta, ev in zip(self.spec.cliques, self.spec.weights, self.spec.evaluators)
        )

    def replay(self, action: JointAction, horizon: int, seed) -> np.ndarray:
        if not all(isinstance(ev, TableReward) for ev in self.spec.evaluators):
            return super().replay(action, horizon, seed)
        self.reset(seed)
        n_random = sum(ev.kind == "bernoulli" for ev in self.spec.evaluators)
        # same stream layout as step(): one uniform per Bernoulli clique per round
        uniforms = self.rng.random((horizon, n_random))
        total = np.zeros(horizon)
        col = 0
        for clique, beta, ev in zip(self.spec.cliques, self.spec.weights, self.spec.evaluators):
            m = ev.mean(tuple(action[i] for i in clique), 0)
            if ev.kind == "bernoulli":
                total += beta * (uniforms[:, col] < m)
                col += 1
            else:
                total += beta * m
        return np.minimum(total, 1.0)


@dataclass
class Trajectory:
    actions: np.ndarray  # (T, n_players) int
    rewards: np.ndarray  # (T,) realised rewards
    expected: np.ndarray | None = None  # (T,) conditional mean rewards, if the env exposes them

    def __len__(self) -> int:
        return len(self.rewards)


def play_round(
    graph: GameGraph,
    banks: Sequence[LearnerBank],
    env: Environment,
    t: int,
    rngs: Sequence[np.random.Generator],
) -> tuple[JointAction, float]:
    """Play one round: act in topological order, then broadcast the shared reward."""
    action = [0] * graph.n_players
    parents = graph.parents
    for i in graph.topo_order:
        action[i] = banks[i].act(tuple(action[j] for j in parents[i]), rngs[i])
    action = tuple(action)
    reward = env.step(t, action)
    if not 0.0 <= reward <= 1.0:
        raise ValueError(f"environment reward {reward!r} outside [0, 1] at round {t}")
    for bank in banks:
        bank.update(reward)
    return action, reward


def run_game(
    graph: GameGraph,
    env: Environment | CliqueRewardSpec,
    horizon: int,
    master_seed: int,
    run: int = 0,
    record_expected: bool = True,
) -> Trajectory:
    """Play ``horizon`` rounds with fresh learners; deterministic given ``(master_seed, run)``."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if isinstance(env, CliqueRewardSpec):
        env.validate(graph)
        env = CliqueEnvironment(env)
    env.reset(env_seed(master_seed, run))
    banks = graph.make_banks()
    rngs = [player_rng(master_seed, run, i) for i in range(graph.n_players)]
    want_expected = record_expected and env.has_expected

    actions = np.empty((horizon, graph.n_players), dtype=np.int64)
    rewards = np.empty(horizon)
    expected = np.empty(horizon) if want_expected else None
    for t in range(1, horizon + 1):
        action, reward = play_round(graph, banks, env, t, rngs)
        actions[t - 1] = action
        rewards[t - 1] = reward
        if want_expected:
            expected[t - 1] = env.expected_reward(t, action)
    return Trajectory(actions, rewards, expected)
