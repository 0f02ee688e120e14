"""Planner/worker taxation game.

One planner picks a marginal tax rate per income bracket; ``M`` workers, each
observing the planner and all lower-indexed workers, pick how much to work.
Worker ``j`` choosing level ``a`` (1-based) earns gross income ``5 a`` and
incurs effective labour ``a / s_j``. Income is taxed piecewise-linearly. The
shared reward mixes each worker's isoelastic utility of *cumulative* net
income minus cumulative labour with the tax collected this round.

Both reward terms are normalised to ``[0, 1]`` with per-round envelopes. With
per-round net income in ``[n_lo, n_hi]`` and labour in ``[l_lo, l_hi]`` (the
extremes of the constant profiles "lowest action, highest rates" and
"highest action, lowest rates"), any history satisfies
``z(t) in [t n_lo, t n_hi]`` and ``l(t) in [t l_lo, t l_hi]``; utility is
increasing in ``z`` and decreasing in ``l``, so

    U_max(t) = g(t n_hi) - t l_lo,    U_min(t) = g(t n_lo) - t l_hi

bound every reachable utility. The tax term is divided by the largest
possible per-round total tax.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .game import Environment, GameGraph

PRESET = "taxation-v1"


def collected_tax(income: float, boundaries, rates) -> float:
    """Marginal tax on ``income``.

    ``boundaries`` are the finite upper edges of all but the top bracket
    (the first bracket starts at 0, the last is open-ended); ``rates`` has
    one entry per bracket.
    """
    if income < 0:
        raise ValueError(f"income must be non-negative, got {income}")
    if len(rates) != len(boundaries) + 1:
        raise ValueError(f"{len(rates)} rates for {len(boundaries) + 1} brackets")
    tax = 0.0
    lower = 0.0
    for rate, upper in zip(rates, list(boundaries) + [math.inf]):
        if income > upper:
            tax += rate * (upper - lower)
        else:
            tax += rate * (income - lower)
            break
        lower = upper
    return tax


def worker_utility(net_income: float, labour: float, curvature: float) -> float:
    """Isoelastic utility of cumulative net income minus cumulative labour."""
    if net_income < 0:
        raise ValueError("cumulative net income must be non-negative")
    if curvature <= 0 or curvature == 1:
        raise ValueError("curvature must be positive and different from 1")
    e = 1.0 - curvature
    return (net_income**e - 1.0) / e - labour


@dataclass
class TaxParams:
    n_workers: int = 3
    boundaries: tuple = (14.0,)
    rate_grid: tuple = (0.1, 0.3, 0.5)
    n_levels: int = 3
    income_per_level: float = 5.0
    labour_per_level: float = 1.0
    skills: tuple | None = None  # defaults to s_j = j (1-based)
    curvature: float = 0.3
    worker_weight: float | None = None  # defaults to 1/M
    tax_weight: float | None = None  # defaults to M

    def __post_init__(self):
        m = self.n_workers
        if m < 1:
            raise ValueError("need at least one worker")
        self.boundaries = tuple(float(b) for b in self.boundaries)
        self.rate_grid = tuple(float(r) for r in self.rate_grid)
        if self.skills is None:
            self.skills = tuple(float(j) for j in range(1, m + 1))
        self.skills = tuple(float(s) for s in self.skills)
        if self.worker_weight is None:
            self.worker_weight = 1.0 / m
        if self.tax_weight is None:
            self.tax_weight = float(m)
        errors = self.check()
        if errors:
            raise ValueError("; ".join(errors))

    def check(self) -> list[str]:
        errors = []
        b = (0.0,) + self.boundaries
        if any(hi <= lo for lo, hi in zip(b, b[1:])):
            errors.append("bracket boundaries must be positive and strictly increasing")
        if not self.rate_grid or any(not 0.0 <= r <= 1.0 for r in self.rate_grid):
            errors.append("tax rates must lie in [0, 1]")
        if len(self.skills) != self.n_workers or any(s <= 0 for s in self.skills):
            errors.append("one positive skill per worker is required")
        if self.n_levels < 1 or self.income_per_level <= 0 or self.labour_per_level < 0:
            errors.append("worker action map must be positive")
        if self.curvature <= 0 or self.curvature == 1:
            errors.append("utility curvature must be positive and different from 1")
        if self.curvature > 1 and max(self.rate_grid) >= 1.0:
            errors.append("curvature > 1 with a 100% rate makes utility singular at zero income")
        if self.worker_weight < 0 or self.tax_weight < 0:
            errors.append("reward weights must be non-negative")
        elif abs(self.n_workers * self.worker_weight + self.tax_weight - (self.n_workers + 1)) > 1e-12:
            errors.append("weights must satisfy M*w + w_p = M + 1")
        return errors

    @property
    def n_brackets(self) -> int:
        return len(self.boundaries) + 1

    @property
    def planner_actions(self) -> int:
        return len(self.rate_grid) ** self.n_brackets

    def rates(self, planner_action: int) -> tuple:
        """Per-bracket rates for a planner action (first bracket most significant)."""
        if not 0 <= planner_action < self.planner_actions:
            raise ValueError(f"planner action {planner_action} out of range")
        k = len(self.rate_grid)
        digits = []
        for _ in range(self.n_brackets):
            planner_action, d = divmod(planner_action, k)
            digits.append(d)
        return tuple(self.rate_grid[d] for d in reversed(digits))

    def income(self, level_index: int) -> float:
        return self.income_per_level * (level_index + 1)

    def labour(self, worker: int, level_index: int) -> float:
        return self.labour_per_level * (level_index + 1) / self.skills[worker]


def build_graph(n_workers: int, planner_actions: int, n_levels: int) -> GameGraph:
    """Planner (player 0) observed by every worker; worker ``i`` observes workers ``< i``."""
    workers = range(1, n_workers + 1)
    edges = [(0, j) for j in workers] + [(i, j) for i, j in itertools.combinations(workers, 2)]
    return GameGraph(n_workers + 1, edges, [planner_actions] + [n_levels] * n_workers)


class TaxationEnv(Environment):
    """Deterministic, history-dependent taxation reward.

    Joint action layout: ``(planner, worker_1, ..., worker_M)``, with worker
    actions 0-based indices into levels ``1..n_levels``.
    """

    def __init__(self, params: TaxParams | None = None):
        self.params = p = params or TaxParams()
        m = p.n_workers
        self._rates = [p.rates(k) for k in range(p.planner_actions)]
        # tax[k][level]: tax on that level's income under planner action k
        self._tax = [
            [collected_tax(p.income(lv), p.boundaries, rates) for lv in range(p.n_levels)]
            for rates in self._rates
        ]
        self._labour = [[p.labour(j, lv) for lv in range(p.n_levels)] for j in range(m)]

        lo_rates = tuple([min(p.rate_grid)] * p.n_brackets)
        hi_rates = tuple([max(p.rate_grid)] * p.n_brackets)
        x_lo, x_hi = p.income(0), p.income(p.n_levels - 1)
        self.net_lo = x_lo - collected_tax(x_lo, p.boundaries, hi_rates)
        self.net_hi = x_hi - collected_tax(x_hi, p.boundaries, lo_rates)
        self.labour_lo = min(self._labour[j][0] for j in range(m))
        self.labour_hi = max(self._labour[j][-1] for j in range(m))
        self.tax_max = m * collected_tax(x_hi, p.boundaries, hi_rates)
        self._e = 1.0 - p.curvature
        self._c1 = p.worker_weight / (m + 1)
        # an all-zero rate grid never collects tax; the tax term is then 0
        self._c2 = p.tax_weight / (m + 1) / self.tax_max if self.tax_max > 0 else 0.0
        self.reset(None)

    def reset(self, seed=None) -> None:
        # deterministic: the seed is accepted for interface compatibility only
        m = self.params.n_workers
        self.z = [0.0] * m
        self.cum_labour = [0.0] * m
        self.t = 0

    def _g(self, z):
        return (z**self._e - 1.0) / self._e

    def utility_bounds(self, t: int) -> tuple[float, float]:
        """``(U_min(t), U_max(t))`` envelope of reachable worker utilities at round t."""
        return (
            self._g(t * self.net_lo) - t * self.labour_hi,
            self._g(t * self.net_hi) - t * self.labour_lo,
        )

    def step(self, t: int, action) -> float:
        p = self.params
        planner = action[0]
        tax_row = self._tax[planner]
        self.t += 1
        n = self.t
        u_min = self._g(n * self.net_lo) - n * self.labour_hi
        span = self._g(n * self.net_hi) - n * self.labour_lo - u_min
        if span <= 0:
            span = math.inf  # every worker utility coincides: the term is 0
        utility_sum = 0.0
        tax_sum = 0.0
        z, cum_labour, e = self.z, self.cum_labour, self._e
        for j in range(p.n_workers):
            lv = action[j + 1]
            tax = tax_row[lv]
            tax_sum += tax
            z[j] += p.income_per_level * (lv + 1) - tax
            cum_labour[j] += self._labour[j][lv]
            u = (z[j] ** e - 1.0) / e - cum_labour[j]
            utility_sum += (u - u_min) / span
        reward = self._c1 * utility_sum + self._c2 * tax_sum
        if not -1e-12 <= reward <= 1.0 + 1e-12 or not math.isfinite(reward):
            raise ValueError(f"taxation reward {reward!r} escaped [0, 1] at round {n}")
        return min(max(reward, 0.0), 1.0)

    def replay(self, action, horizon: int, seed=None) -> np.ndarray:
        """Vectorised constant-action rollout; agrees with repeated ``step`` to rounding."""
        p = self.params
        action = tuple(action)
        t = np.arange(1, horizon + 1, dtype=float)
        u_min = self._g(t * self.net_lo) - t * self.labour_hi
        span = self._g(t * self.net_hi) - t * self.labour_lo - u_min
        span[span <= 0] = np.inf
        tax_row = self._tax[action[0]]
        utility_sum = np.zeros(horizon)
        tax_sum = 0.0
        for j in range(p.n_workers):
            lv = action[j + 1]
            tax_sum += tax_row[lv]
            z = t * (p.income(lv) - tax_row[lv])
            u = self._g(z) - t * self._labour[j][lv]
            utility_sum += (u - u_min) / span
        reward = self._c1 * utility_sum + self._c2 * tax_sum
        self.reset(seed)
        return np.clip(reward, 0.0, 1.0)


@dataclass
class Experiment:
    graph: GameGraph
    params: TaxParams
    cliques: list = field(default_factory=list)  # clique size vectors for the bound

    def make_env(self) -> TaxationEnv:
        return TaxationEnv(self.params)


def build_experiment(**overrides) -> Experiment:
    """The 4-player taxation game: 2 brackets split at 14, rates {0.1, 0.3, 0.5}, 3 workers."""
    params = TaxParams(**overrides)
    graph = build_graph(params.n_workers, params.planner_actions, params.n_levels)
    return Experiment(graph, params, [list(graph.action_sizes)])
