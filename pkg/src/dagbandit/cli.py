"""Command-line experiment runner.

    dagbandit run CONFIG [--seeds S] [--horizon T] [--out DIR] [--serial] [--checkpoints C]
    dagbandit bounds SPEC [--weights W] [--checkpoints C] [--out FILE]
    dagbandit oracle CONFIG [--horizon T] [--checkpoints C]

Seeds run in a process pool of ``$DAGBANDIT_WORKERS`` workers (default: CPU
count); ``--serial`` runs them in-process. Results are merged in run order,
so outputs do not depend on the pool.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .game import run_game
from .regret import (
    OracleCapExceeded,
    OracleResult,
    RegretReport,
    best_pure_joint_action,
    bound_dag,
    log_checkpoints,
    regret_from_curves,
)

WORKERS_ENV = "DAGBANDIT_WORKERS"
CSV_HEADER = ("T", "regret", "lo", "hi", "bound")
CUMULATIVE_CSV = "regret_cumulative.csv"
AVERAGE_CSV = "regret_average.csv"


def format_rows(rows, header=CSV_HEADER) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([row[0]] + [f"{v:.10g}" for v in row[1:]])
    return buf.getvalue()


def replay_seeds(master_seed: int, count: int) -> list:
    # separate entropy from the game streams, which are keyed on master_seed alone
    return [np.random.SeedSequence([master_seed, 1], spawn_key=(k,)) for k in range(count)]


def compute_oracle(cfg: ExperimentConfig) -> OracleResult:
    return best_pure_joint_action(
        cfg.make_env,
        cfg.graph,
        cfg.horizon,
        replay_seeds=replay_seeds(cfg.master_seed, cfg.oracle_replays),
        checkpoints=cfg.checkpoints,
        cap=cfg.oracle_cap,
        expected=cfg.oracle_expected,
    )


def _run_one(cfg: ExperimentConfig, run: int) -> np.ndarray:
    traj = run_game(cfg.graph, cfg.make_env(), cfg.horizon, cfg.master_seed, run=run)
    rewards = traj.expected if (cfg.oracle_expected and traj.expected is not None) else traj.rewards
    return np.cumsum(rewards)[np.asarray(cfg.checkpoints) - 1]


def _worker_count() -> int:
    value = os.environ.get(WORKERS_ENV)
    if value:
        return max(1, int(value))
    return os.cpu_count() or 1


def simulate(cfg: ExperimentConfig, serial: bool = False) -> np.ndarray:
    """Per-run cumulative rewards at the checkpoints, shape ``(seeds, checkpoints)``."""
    workers = 1 if serial else min(_worker_count(), cfg.seeds)
    if workers == 1:
        curves = [_run_one(cfg, run) for run in range(cfg.seeds)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            curves = list(pool.map(_run_one, [cfg] * cfg.seeds, range(cfg.seeds)))
    return np.array(curves)


@dataclass
class ExperimentResult:
    report: RegretReport
    oracle: OracleResult
    paths: tuple


def run_experiment(cfg: ExperimentConfig, serial: bool = False, out: str | None = None) -> ExperimentResult:
    """Oracle once, ``cfg.seeds`` games, then the cumulative and time-averaged CSVs."""
    oracle = compute_oracle(cfg)
    curves = simulate(cfg, serial=serial)
    report = regret_from_curves(curves, oracle, cfg.bound)
    out_dir = Path(out or cfg.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = (out_dir / CUMULATIVE_CSV, out_dir / AVERAGE_CSV)
    paths[0].write_text(format_rows(report.rows()))
    paths[1].write_text(format_rows(report.rows(average=True)))
    return ExperimentResult(report, oracle, paths)


def _parse_checkpoints(value: str | None, horizon: int) -> list | None:
    if value is None:
        return None
    if value == "log":
        return log_checkpoints(horizon)
    return [int(float(v)) for v in value.split(",") if v.strip()]


def _parse_int(value: str) -> int:
    # accepts 1e5-style horizons
    f = float(value)
    if f != int(f):
        raise argparse.ArgumentTypeError(f"expected an integer, got {value}")
    return int(f)


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    horizon = getattr(args, "horizon", None)
    cps = _parse_checkpoints(getattr(args, "checkpoints", None), horizon or cfg.horizon)
    return cfg.with_overrides(
        horizon=horizon, seeds=getattr(args, "seeds", None), checkpoints=cps
    )


def cmd_run(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    start = time.perf_counter()
    result = run_experiment(cfg, serial=args.serial, out=args.out)
    elapsed = time.perf_counter() - start
    report = result.report
    t = int(report.checkpoints[-1])
    print(f"best joint action   {result.oracle.best_action}  (mean cumulative reward {result.oracle.best_value:.6g})")
    print(f"final regret  T={t}  {report.regret[-1]:.6g}  (time-averaged {report.average[-1]:.6g}, +/-2sd {2 * report.std[-1]:.3g})")
    print(f"final bound   T={t}  {report.bound[-1]:.6g}  (time-averaged {report.bound[-1] / t:.6g})")
    print(f"runtime       {elapsed:.1f}s over {cfg.seeds} seeds")
    for p in result.paths:
        print(f"wrote {p}")
    return 0


def _parse_sizes_spec(spec: str) -> tuple[list, list | None]:
    path = Path(spec)
    if path.suffix == ".json" or path.is_file():
        data = json.loads(path.read_text())
        if "sizes" in data:
            return [list(data["sizes"])], None
        return [list(c) for c in data["cliques"]], data.get("weights")
    cliques = [[int(v) for v in part.split(",") if v.strip()] for part in spec.split(";") if part.strip()]
    return cliques, None


def bounds_table(cliques, weights, horizons) -> list[tuple]:
    return [(int(t), bound_dag(cliques, weights, t)) for t in horizons]


def cmd_bounds(args) -> int:
    cliques, weights = _parse_sizes_spec(args.spec)
    if args.weights is not None:
        weights = [float(w) for w in args.weights.split(",")]
    if weights is None:
        weights = [1.0 / len(cliques)] * len(cliques)
    cps = args.checkpoints or "1000000"
    horizons = log_checkpoints(10**6) if cps == "log" else _parse_checkpoints(cps, 0)
    text = format_rows(bounds_table(cliques, weights, horizons), header=("T", "bound"))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_oracle(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    oracle = compute_oracle(cfg)
    print(f"best joint action  {oracle.best_action}")
    print(f"best value         {oracle.best_value:.10g}")
    print(f"horizon            {cfg.horizon}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dagbandit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate an experiment and write regret CSVs")
    run.add_argument("config")
    run.add_argument("--seeds", type=int)
    run.add_argument("--horizon", type=_parse_int)
    run.add_argument("--out", help="output directory (default: the config's 'output')")
    run.add_argument("--serial", action="store_true", help="run seeds in-process")
    run.add_argument("--checkpoints", help="'log' or a comma-separated list of rounds")
    run.set_defaults(func=cmd_run)

    bounds = sub.add_parser("bounds", help="tabulate regret bounds")
    bounds.add_argument("spec", help="'9,3,3,3', cliques as '9,3;9,3', or a JSON file")
    bounds.add_argument("--weights", help="comma-separated clique weights (default: equal)")
    bounds.add_argument("--checkpoints", help="'log' or comma-separated horizons (default 1e6)")
    bounds.add_argument("--out")
    bounds.set_defaults(func=cmd_bounds)

    oracle = sub.add_parser("oracle", help="print the best pure joint action")
    oracle.add_argument("config")
    oracle.add_argument("--horizon", type=_parse_int)
    oracle.add_argument("--checkpoints")
    oracle.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except OracleCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
