from .dqn import (DivergenceError, EpisodeRecord, Hyperparams, bellman_targets, dqn_loss, dqn_loss_and_grad,
                  dqn_train, epsilon_greedy, epsilon_schedule, greedy_action, greedy_rollout)
from .env import Action, EnvConfig, UavRelayEnv, action_set
from .network import QNetwork
from .replay import Experience, ReplayMemory
from .search import GridCell, grid_search
from .tabular import QTable, q_update, train_qlearning, value_iteration
from .toys import ChainEnv, GridWorld

__all__ = [
    "Action", "ChainEnv", "DivergenceError", "EnvConfig", "EpisodeRecord", "Experience", "GridCell",
    "GridWorld", "Hyperparams", "QNetwork", "QTable", "ReplayMemory", "UavRelayEnv", "action_set",
    "bellman_targets", "dqn_loss", "dqn_loss_and_grad", "dqn_train", "epsilon_greedy", "epsilon_schedule",
    "greedy_action", "greedy_rollout", "grid_search", "q_update", "train_qlearning", "value_iteration",
]
