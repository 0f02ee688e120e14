"""Decentralised bandit learning on DAG-structured multiplayer games."""

from .bank import LearnerBank, ProtocolError, context_index
from .game import (
    CliqueEnvironment,
    CliqueRewardSpec,
    Environment,
    GameGraph,
    GraphError,
    TableReward,
    Trajectory,
    compose_reward,
    play_round,
    project,
    run_game,
    validate,
)
from .regret import (
    OracleCapExceeded,
    OracleResult,
    RegretReport,
    best_pure_joint_action,
    bound_clique,
    bound_dag,
    bound_single,
    bound_two,
    log_checkpoints,
    pseudo_regret,
)
from .tsallis import TsallisINF, learning_rate, loss_update, solve_fixed_point, tsallis_weights

__version__ = "0.1.0"
