"""Hyperparameter grid search over discount and learning rate."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..numerics import make_rng
from .dqn import Hyperparams, dqn_train


@dataclass(frozen=True)
class GridCell:
    hyperparams: Hyperparams
    score: float
    log: list


def final_score(log, fraction: float = 0.1) -> float:
    """Mean cumulative reward over the last ``fraction`` of episodes."""
    n = max(1, int(round(len(log) * fraction)))
    return float(np.mean([rec.cumulative_reward for rec in log[-n:]]))


def grid_search(env_factory, gammas, learning_rates, base: Hyperparams, seed: int,
                trainer=dqn_train) -> list[GridCell]:
    """Train one agent per (gamma, lr) and rank by final score, best first.

    Every cell starts from the same seed and a fresh environment, so equal
    settings give equal scores.
    """
    gammas, learning_rates = list(gammas), list(learning_rates)
    if not gammas or not learning_rates:
        raise ValueError("grids must be non-empty")
    cells = []
    for gamma, lr in itertools.product(gammas, learning_rates):
        hp = base.with_(gamma=gamma, learning_rate=lr)
        result = trainer(env_factory(), hp, make_rng(seed, 0x5EA))
        log = result[1] if isinstance(result, tuple) else result.log
        cells.append(GridCell(hp, final_score(log), log))
    # stable: ties keep grid order
    return sorted(cells, key=lambda c: -c.score)
