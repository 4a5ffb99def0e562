"""Tabular Q-learning and a value-iteration reference for small deterministic models."""

from __future__ import annotations

import math
from collections import defaultdict

import numpy as np

from .dqn import EpisodeRecord, Hyperparams, epsilon_greedy, epsilon_schedule


def bellman_update(q: float, r: float, max_next: float, alpha: float, gamma: float) -> float:
    """``(1 - alpha) Q + alpha (r + gamma max_a' Q(s', a'))``."""
    return (1.0 - alpha) * q + alpha * (r + gamma * max_next)


class QTable:
    """Q-values keyed by hashable state; unseen states get tiny random values."""

    def __init__(self, n_actions: int, rng: np.random.Generator | None = None, init_scale: float = 1e-6):
        self.n_actions = n_actions
        self._rng = rng if rng is not None else np.random.default_rng(0)
        self._scale = init_scale
        self.values: dict = {}

    def row(self, s) -> np.ndarray:
        if s not in self.values:
            self.values[s] = self._rng.uniform(0.0, self._scale, self.n_actions)
        return self.values[s]

    def __getitem__(self, key):
        s, a = key
        return self.row(s)[a]


def q_update(table: QTable, s, a: int, r: float, s_next, alpha: float, gamma: float,
             terminal: bool = False) -> float:
    """Apply one Bellman update to ``table[s, a]`` and return the new value."""
    max_next = 0.0 if terminal else float(table.row(s_next).max())
    row = table.row(s)
    row[a] = bellman_update(row[a], r, max_next, alpha, gamma)
    return float(row[a])


def train_qlearning(env, hp: Hyperparams, rng: np.random.Generator):
    """Epsilon-greedy tabular Q-learning; ``hp.learning_rate`` is the step size alpha.

    Returns ``(table, log)``; the log's loss columns hold the mean squared and
    mean absolute TD error of the episode.
    """
    table = QTable(env.n_actions, rng)
    log = []
    for episode, eps in enumerate(epsilon_schedule(hp, hp.episodes)):
        s = env.discretize(env.reset(rng))
        total = 0.0
        td = []
        for _ in range(hp.steps_per_episode):
            a = epsilon_greedy(table.row(s), eps, rng)
            raw, r, done, _ = env.step(a)
            s_next = env.discretize(raw)
            before = table[s, a]
            target = r + (0.0 if done else hp.gamma * float(table.row(s_next).max()))
            td.append(target - before)
            q_update(table, s, a, r, s_next, hp.learning_rate, hp.gamma, done)
            total += r
            s = s_next
            if done:
                break
        td_arr = np.asarray(td)
        log.append(EpisodeRecord(episode, total,
                                 float(np.mean(td_arr**2)) if td else math.nan,
                                 float(np.mean(np.abs(td_arr))) if td else math.nan, eps))
    return table, log


def value_iteration(model, n_states: int, n_actions: int, gamma: float,
                    tol: float = 1e-12, max_iters: int = 100_000) -> np.ndarray:
    """Optimal Q for a deterministic model ``model(s, a) -> (s_next, r, terminal)``."""
    q = np.zeros((n_states, n_actions))
    for _ in range(max_iters):
        new = np.empty_like(q)
        for s in range(n_states):
            for a in range(n_actions):
                s2, r, terminal = model(s, a)
                new[s, a] = r + (0.0 if terminal else gamma * q[s2].max())
        if np.max(np.abs(new - q)) < tol:
            return new
        q = new
    return q


def greedy_table_policy(table: QTable) -> dict:
    return {s: int(np.argmax(v)) for s, v in table.values.items()}
