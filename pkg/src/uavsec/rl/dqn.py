"""Deep Q-learning with replay memory, a target network and epsilon-greedy exploration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .network import QNetwork
from .replay import ReplayMemory

DIVERGENCE_LIMIT = 1e9


class DivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class Hyperparams:
    gamma: float = 0.9
    learning_rate: float = 1e-3
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay: float = 0.99      # multiplicative, once per episode
    batch_size: int = 32
    target_update_every: int = 100   # environment steps between target syncs
    memory_capacity: int = 10_000
    episodes: int = 500
    steps_per_episode: int = 50
    hidden: tuple[int, ...] = (64, 64)

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if not 0.0 <= self.epsilon_end <= self.epsilon_start <= 1.0:
            raise ValueError("need 0 <= epsilon_end <= epsilon_start <= 1")
        if not 0.0 < self.epsilon_decay <= 1.0:
            raise ValueError("epsilon_decay must lie in (0, 1]")
        for name in ("batch_size", "target_update_every", "memory_capacity", "episodes", "steps_per_episode"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.batch_size > self.memory_capacity:
            raise ValueError("batch_size cannot exceed memory_capacity")

    def with_(self, **changes) -> "Hyperparams":
        return replace(self, **changes)


@dataclass(frozen=True)
class EpisodeRecord:
    episode: int
    cumulative_reward: float
    loss_mse: float
    loss_mae: float
    epsilon: float


def epsilon_schedule(hp: Hyperparams, episodes: int) -> list[float]:
    eps, out = hp.epsilon_start, []
    for _ in range(episodes):
        out.append(eps)
        eps = max(hp.epsilon_end, eps * hp.epsilon_decay)
    return out


def greedy_action(q_values) -> int:
    return int(np.argmax(q_values))


def epsilon_greedy(q_values, epsilon: float, rng: np.random.Generator) -> int:
    if rng.random() < epsilon:
        return int(rng.integers(len(q_values)))
    return greedy_action(q_values)


def bellman_targets(batch, q_target: QNetwork, gamma: float) -> np.ndarray:
    _, _, r, s_next, terminal = batch
    best_next = q_target.forward(s_next).max(axis=1)
    return r + gamma * np.where(terminal, 0.0, best_next)


def dqn_loss(batch, q_train: QNetwork, q_target: QNetwork, gamma: float) -> float:
    """Mean squared TD error; the target side is a constant."""
    return dqn_loss_and_grad(batch, q_train, q_target, gamma)[0]


def dqn_loss_and_grad(batch, q_train: QNetwork, q_target: QNetwork, gamma: float):
    """Return ``(loss, grads, td_errors)`` for one mini-batch."""
    s, a, _, _, _ = batch
    if len(a) == 0:
        raise ValueError("empty batch")
    y = bellman_targets(batch, q_target, gamma)
    q, cache = q_train.forward_cached(s)
    rows = np.arange(len(a))
    td = y - q[rows, a]
    d_out = np.zeros_like(q)
    d_out[rows, a] = -2.0 * td / len(a)
    return float(np.mean(td**2)), q_train.backward(cache, d_out), td


@dataclass
class DqnResult:
    network: QNetwork
    log: list[EpisodeRecord]
    target: QNetwork
    sync_steps: list[int] = field(default_factory=list)

    def __iter__(self):
        return iter((self.network, self.log))


def dqn_train(env, hp: Hyperparams, rng: np.random.Generator, observer=None) -> DqnResult:
    """Train a DQN on ``env`` for ``hp.episodes`` episodes of ``hp.steps_per_episode`` steps.

    ``env`` must provide ``reset(rng)``, ``step(a)``, ``encode(s)``,
    ``n_actions`` and ``state_dim``. ``observer(step, q_train, q_target)`` is
    called after every environment step when given.
    """
    q_train = QNetwork([env.state_dim, *hp.hidden, env.n_actions], rng)
    q_target = q_train.copy()
    memory = ReplayMemory(hp.memory_capacity)
    log: list[EpisodeRecord] = []
    syncs: list[int] = []
    steps = 0
    for episode, eps in enumerate(epsilon_schedule(hp, hp.episodes)):
        s = env.encode(env.reset(rng))
        total = 0.0
        sq, ab = [], []
        for _ in range(hp.steps_per_episode):
            a = epsilon_greedy(q_train.forward(s)[0], eps, rng)
            raw_next, r, done, _ = env.step(a)
            s_next = env.encode(raw_next)
            memory.push(s, a, r, s_next, done)
            total += r
            s = s_next
            steps += 1
            if len(memory) >= hp.batch_size:
                batch = memory.sample(hp.batch_size, rng)
                loss, grads, td = dqn_loss_and_grad(batch, q_train, q_target, hp.gamma)
                if not math.isfinite(loss) or loss > DIVERGENCE_LIMIT:
                    raise DivergenceError(
                        f"DQN loss {loss:.3g} at episode {episode}, step {steps}; "
                        f"lr={hp.learning_rate}, gamma={hp.gamma}")
                q_train.sgd_step(grads, hp.learning_rate)
                sq.append(loss)
                ab.append(float(np.mean(np.abs(td))))
            if steps % hp.target_update_every == 0:
                q_target.load_from(q_train)
                syncs.append(steps)
            if observer is not None:
                observer(steps, q_train, q_target)
            if done:
                break
        log.append(EpisodeRecord(episode, total, float(np.mean(sq)) if sq else math.nan,
                                 float(np.mean(ab)) if ab else math.nan, eps))
    return DqnResult(q_train, log, q_target, syncs)


def greedy_rollout(env, network: QNetwork, steps: int, rng: np.random.Generator, **reset_kwargs):
    """Follow the greedy policy; returns ``(states, actions, rewards)``."""
    s = env.reset(rng, **reset_kwargs)
    states, actions, rewards = [s], [], []
    for _ in range(steps):
        a = greedy_action(network.forward(env.encode(s))[0])
        s, r, done, _ = env.step(a)
        states.append(s)
        actions.append(a)
        rewards.append(r)
        if done:
            break
    return states, actions, rewards
