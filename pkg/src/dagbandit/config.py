"""Experiment configuration files (JSON).

Schema::

    {
      "preset": "taxation-v1",              # shorthand for environment.type
      "graph": {"n_players": 2, "edges": [[0, 1]], "action_sizes": [2, 2]},
      "environment": {
        "type": "taxation-v1", "params": {"n_workers": 3, ...}
        # or
        "type": "stochastic-clique", "cliques": [[0, 1]], "weights": [1.0],
        "means": [[[0.9, 0.5], [0.5, 0.5]]], "kind": "bernoulli"
      },
      "horizon": 100000,
      "seeds": 20,
      "master_seed": 7,
      "checkpoints": "log",                 # or an explicit list of rounds
      "output": "results",
      "oracle": {"replays": 1, "cap": 1000000, "expected": true}
    }

The taxation preset implies its own graph, so ``graph`` must be omitted for
it. Unknown keys are errors. Players are 0-indexed.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from .game import CliqueEnvironment, CliqueRewardSpec, Environment, GameGraph, GraphError, TableReward
from .regret import DEFAULT_ORACLE_CAP, bound_dag, log_checkpoints
from .taxation import PRESET as TAXATION_PRESET
from .taxation import TaxationEnv, TaxParams, build_experiment

STOCHASTIC_CLIQUE = "stochastic-clique"
ENV_TYPES = (TAXATION_PRESET, STOCHASTIC_CLIQUE)

_TOP_KEYS = {"preset", "graph", "environment", "horizon", "seeds", "master_seed", "checkpoints", "output", "oracle"}
_GRAPH_KEYS = {"n_players", "edges", "action_sizes"}
_ORACLE_KEYS = {"replays", "cap", "expected"}
_CLIQUE_ENV_KEYS = {"type", "cliques", "weights", "means", "kind"}
_TAX_ENV_KEYS = {"type", "params"}
_TAX_PARAM_KEYS = {f.name for f in dataclasses.fields(TaxParams)}


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid config:\n  " + "\n  ".join(self.errors))


@dataclass
class ExperimentConfig:
    graph: GameGraph
    environment: dict
    horizon: int
    seeds: int = 1
    master_seed: int = 0
    checkpoints: list = field(default_factory=list)
    output: str = "results"
    oracle_replays: int = 1
    oracle_cap: int = DEFAULT_ORACLE_CAP
    oracle_expected: bool = True

    def __post_init__(self):
        if not self.checkpoints:
            self.checkpoints = log_checkpoints(self.horizon)

    def make_env(self) -> Environment:
        env = self.environment
        if env["type"] == TAXATION_PRESET:
            return TaxationEnv(TaxParams(**env.get("params", {})))
        return CliqueEnvironment(self.clique_spec())

    def clique_spec(self) -> CliqueRewardSpec:
        env = self.environment
        kind = env.get("kind", "bernoulli")
        return CliqueRewardSpec(
            env["cliques"], env["weights"], [TableReward(m, kind) for m in env["means"]]
        )

    def bound_cliques(self) -> tuple[list, list]:
        """Clique size vectors (members in observation order) and their weights."""
        if self.environment["type"] == TAXATION_PRESET:
            return [[self.graph.action_sizes[i] for i in self.graph.topo_order]], [1.0]
        rank = {p: k for k, p in enumerate(self.graph.topo_order)}
        spec = self.environment
        sizes = [
            [self.graph.action_sizes[i] for i in sorted(clique, key=rank.__getitem__)]
            for clique in spec["cliques"]
        ]
        return sizes, [float(b) for b in spec["weights"]]

    def bound(self, t: int) -> float:
        cliques, weights = self.bound_cliques()
        return bound_dag(cliques, weights, t)

    def with_overrides(self, **changes) -> "ExperimentConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        if "horizon" in changes and "checkpoints" not in changes:
            changes["checkpoints"] = [c for c in self.checkpoints if c <= changes["horizon"]]
            if not changes["checkpoints"] or changes["checkpoints"][-1] != changes["horizon"]:
                changes["checkpoints"] = log_checkpoints(changes["horizon"])
        cfg = dataclasses.replace(self, **changes)
        errors = []
        _check_positive_int(cfg.horizon, "horizon", errors)
        _check_positive_int(cfg.seeds, "seeds", errors)
        errors += _checkpoint_errors(cfg.checkpoints, cfg.horizon, "checkpoints")
        if errors:
            raise ConfigError(errors)
        return cfg


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _check_positive_int(v, path, errors):
    if not _is_int(v) or v < 1:
        errors.append(f"{path}: expected a positive integer, got {v!r}")


def _unknown(d: dict, allowed: set, path: str, errors: list) -> None:
    for key in sorted(set(d) - allowed):
        errors.append(f"{path}{key}: unknown key")


def _checkpoint_errors(cps, horizon, path) -> list[str]:
    if not isinstance(cps, list) or not cps:
        return [f"{path}: expected 'log' or a non-empty list of rounds"]
    errors = []
    for k, c in enumerate(cps):
        if not _is_int(c) or not 1 <= c <= (horizon if _is_int(horizon) else c):
            errors.append(f"{path}[{k}]: checkpoint {c!r} outside [1, horizon]")
    if not errors and sorted(set(cps)) != cps:
        errors.append(f"{path}: checkpoints must be strictly increasing")
    if not errors and _is_int(horizon) and cps[-1] != horizon:
        errors.append(f"{path}: the last checkpoint must equal the horizon ({horizon})")
    return errors


def _parse_graph(g, errors) -> GameGraph | None:
    if not isinstance(g, dict):
        errors.append("graph: expected an object")
        return None
    _unknown(g, _GRAPH_KEYS, "graph.", errors)
    n = g.get("n_players")
    edges = g.get("edges", [])
    sizes = g.get("action_sizes")
    n_before = len(errors)
    if not _is_int(n) or n < 1:
        errors.append(f"graph.n_players: expected a positive integer, got {n!r}")
    if not isinstance(edges, list):
        errors.append("graph.edges: expected a list of [parent, child] pairs")
        edges = []
    for k, e in enumerate(edges):
        if not (isinstance(e, list) and len(e) == 2 and all(_is_int(v) for v in e)):
            errors.append(f"graph.edges[{k}]: expected [parent, child], got {e!r}")
        elif e[0] == e[1]:
            errors.append(f"graph.edges[{k}]: self-loop on player {e[0]}")
        elif _is_int(n) and not (0 <= e[0] < n and 0 <= e[1] < n):
            errors.append(f"graph.edges[{k}]: endpoint outside [0, {n})")
    if not isinstance(sizes, list) or not all(_is_int(a) and a >= 1 for a in sizes):
        errors.append(f"graph.action_sizes: expected a list of positive integers, got {sizes!r}")
    elif _is_int(n) and len(sizes) != n:
        errors.append(f"graph.action_sizes: {len(sizes)} entries for {n} players")
    if len(errors) > n_before:
        return None
    try:
        return GameGraph(n, [tuple(e) for e in edges], sizes)
    except GraphError as exc:
        errors.append(f"graph: {exc}")
        return None


def _parse_clique_env(env, graph, errors) -> None:
    _unknown(env, _CLIQUE_ENV_KEYS, "environment.", errors)
    cliques, weights, means = env.get("cliques"), env.get("weights"), env.get("means")
    n_before = len(errors)
    if not isinstance(cliques, list) or not all(
        isinstance(c, list) and c and all(_is_int(i) for i in c) for c in cliques
    ):
        errors.append("environment.cliques: expected a list of non-empty player lists")
    if not isinstance(weights, list) or not all(isinstance(b, (int, float)) and not isinstance(b, bool) for b in weights):
        errors.append("environment.weights: expected a list of numbers")
    if not isinstance(means, list):
        errors.append("environment.means: expected one mean table per clique")
    if env.get("kind", "bernoulli") not in ("bernoulli", "deterministic"):
        errors.append(f"environment.kind: unknown reward kind {env.get('kind')!r}")
    if len(errors) > n_before:
        return
    if not len(cliques) == len(weights) == len(means):
        errors.append("environment: cliques, weights and means must have equal length")
        return
    if any(b < 0 for b in weights):
        errors.append("environment.weights: weights must be non-negative")
    if abs(sum(weights) - 1.0) > 1e-12:
        errors.append(f"environment.weights: weights sum to {sum(weights)!r}, not 1 (sum != 1)")
    seen = set()
    for k, clique in enumerate(cliques):
        if seen & set(clique):
            errors.append(f"environment.cliques[{k}]: overlaps an earlier clique")
        seen |= set(clique)
        if graph is None:
            continue
        if any(not 0 <= i < graph.n_players for i in clique):
            errors.append(f"environment.cliques[{k}]: player outside [0, {graph.n_players})")
            continue
        members = sorted(clique)
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                if not graph.connected(members[a], members[b]):
                    errors.append(
                        f"environment.cliques[{k}]: players {members[a]} and {members[b]} are not adjacent"
                    )
        try:
            table = np.asarray(means[k], dtype=float)
        except (TypeError, ValueError):
            errors.append(f"environment.means[{k}]: not a rectangular numeric table")
            continue
        shape = tuple(graph.action_sizes[i] for i in members)
        if table.shape != shape:
            errors.append(f"environment.means[{k}]: shape {table.shape}, expected {shape}")
        elif np.any((table < 0) | (table > 1)):
            errors.append(f"environment.means[{k}]: entries must lie in [0, 1]")


def _parse_tax_env(env, errors) -> TaxParams | None:
    _unknown(env, _TAX_ENV_KEYS, "environment.", errors)
    params = env.get("params", {})
    if not isinstance(params, dict):
        errors.append("environment.params: expected an object")
        return None
    _unknown(params, _TAX_PARAM_KEYS, "environment.params.", errors)
    try:
        return TaxParams(**{k: v for k, v in params.items() if k in _TAX_PARAM_KEYS})
    except (TypeError, ValueError) as exc:
        errors.append(f"environment.params: {exc}")
        return None


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON experiment config; raises ConfigError listing every problem."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"not valid JSON: {exc}"]) from None
    if not isinstance(raw, dict):
        raise ConfigError(["top level: expected an object"])
    errors: list[str] = []
    _unknown(raw, _TOP_KEYS, "", errors)

    env = raw.get("environment")
    preset = raw.get("preset")
    if preset is not None:
        if preset not in ENV_TYPES:
            errors.append(f"preset: unknown preset {preset!r} (known: {', '.join(ENV_TYPES)})")
        if env is None:
            env = {"type": preset}
        elif env.get("type", preset) != preset:
            errors.append("preset: conflicts with environment.type")
        else:
            env = dict(env, type=preset)
    if env is None:
        errors.append("environment: missing (give 'preset' or 'environment')")
        env = {}
    elif not isinstance(env, dict):
        errors.append("environment: expected an object")
        env = {}
    env_type = env.get("type")
    if env and env_type not in ENV_TYPES:
        errors.append(f"environment.type: unknown environment {env_type!r} (known: {', '.join(ENV_TYPES)})")

    graph = None
    if env_type == TAXATION_PRESET:
        if "graph" in raw:
            errors.append("graph: the taxation preset defines its own graph; remove this key")
        params = _parse_tax_env(env, errors)
        if params is not None:
            graph = build_experiment(**dataclasses.asdict(params)).graph
    elif "graph" in raw:
        graph = _parse_graph(raw["graph"], errors)
    else:
        errors.append("graph: missing")
    if env_type == STOCHASTIC_CLIQUE:
        _parse_clique_env(env, graph, errors)

    horizon = raw.get("horizon")
    _check_positive_int(horizon, "horizon", errors)
    seeds = raw.get("seeds", 1)
    _check_positive_int(seeds, "seeds", errors)
    master_seed = raw.get("master_seed", 0)
    if not _is_int(master_seed) or master_seed < 0:
        errors.append(f"master_seed: expected a non-negative integer, got {master_seed!r}")
    output = raw.get("output", "results")
    if not isinstance(output, str) or not output:
        errors.append("output: expected a path string")

    cps = raw.get("checkpoints", "log")
    if cps == "log":
        cps = log_checkpoints(horizon) if _is_int(horizon) and horizon >= 1 else []
    else:
        errors += _checkpoint_errors(cps, horizon, "checkpoints")

    oracle = raw.get("oracle", {})
    if not isinstance(oracle, dict):
        errors.append("oracle: expected an object")
        oracle = {}
    _unknown(oracle, _ORACLE_KEYS, "oracle.", errors)
    replays = oracle.get("replays", 1)
    _check_positive_int(replays, "oracle.replays", errors)
    cap = oracle.get("cap", DEFAULT_ORACLE_CAP)
    _check_positive_int(cap, "oracle.cap", errors)
    expected = oracle.get("expected", True)
    if not isinstance(expected, bool):
        errors.append("oracle.expected: expected true or false")

    if errors:
        raise ConfigError(errors)
    if env_type == TAXATION_PRESET:
        env = {"type": TAXATION_PRESET, "params": dict(env.get("params", {}))}
    return ExperimentConfig(
        graph=graph,
        environment=env,
        horizon=horizon,
        seeds=seeds,
        master_seed=master_seed,
        checkpoints=list(cps),
        output=output,
        oracle_replays=replays,
        oracle_cap=cap,
        oracle_expected=expected,
    )


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())
