"""MDP for relay trajectory control.

State: UAV position minus the centroid of the relay-served users (meters).
Action: one of seven moves (+-x, +-y, +-z, hold) combined with one of three
relay power steps (+p1, 0, -p1); moves and power are clamped to their bounds.
Reward: sum relay capacity of the served cluster (mode "A", eavesdropper CSI
unknown) or its sum secrecy capacity (mode "B", eavesdropper CSI known).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..channel import LargeScale, draw_large_scale, realize_link_pool
from ..numerics import make_rng
from ..stages import serve_relay

MOVES = {
    "+x": (1, 0, 0), "-x": (-1, 0, 0),
    "+y": (0, 1, 0), "-y": (0, -1, 0),
    "+z": (0, 0, 1), "-z": (0, 0, -1),
    "hold": (0, 0, 0),
}
POWER_STEPS = (1, 0, -1)


@dataclass(frozen=True)
class EnvConfig:
    step_m: float = 20.0            # unit move length
    allow_z: bool = True
    power_actions: bool = True
    power_step_frac: float = 0.1    # p1 as a fraction of P_r,max
    start_power_frac: float = 1.0
    reward_mode: str = "A"
    random_start: bool = True
    state_scale: float = 100.0      # meters per unit of network input
    freeze_channels: bool = False
    formula: str = "kkt"
    rate_factor: float = 1.0

    def __post_init__(self):
        if self.reward_mode not in ("A", "B"):
            raise ValueError("reward_mode must be 'A' or 'B'")
        if self.step_m <= 0 or self.state_scale <= 0:
            raise ValueError("step_m and state_scale must be positive")


@dataclass(frozen=True)
class Action:
    move: str
    power_delta: int


def action_set(config: EnvConfig) -> list[Action]:
    moves = [m for m in MOVES if config.allow_z or "z" not in m]
    powers = POWER_STEPS if config.power_actions else (0,)
    return [Action(m, p) for m in moves for p in powers]


class UavRelayEnv:
    """Relay trajectory environment over a fixed user drop.

    Channels at step t of episode e come from their own seeded stream, so
    two agents trained on the same env see the same fading sequence.
    """

    def __init__(self, scenario, config: EnvConfig | None = None, seed: int = 0,
                 large_scale: LargeScale | None = None):
        self.scenario = scenario
        self.config = config or EnvConfig()
        self.seed = int(seed)
        self.actions = action_set(self.config)
        self.n_actions = len(self.actions)
        self.state_dim = 3
        if large_scale is None:
            large_scale = draw_large_scale(scenario, make_rng(self.seed, 0xA11))
        self.large_scale = large_scale
        users = np.asarray(scenario.users, dtype=float).reshape(-1, 3)
        ar = np.asarray(scenario.ar_users, dtype=int)
        self.centroid = users[ar].mean(axis=0) if len(ar) else np.zeros(3)
        self.bounds = np.asarray(scenario.bounds, dtype=float).reshape(3, 2)
        self.p_r_max = float(scenario.p_r_max)
        self.p1 = self.config.power_step_frac * self.p_r_max
        self.episode = -1
        self.t = 0
        self.position = self.clamp(scenario.uav_start)
        self.power = self.config.start_power_frac * self.p_r_max
        self.last = None

    # -- geometry ---------------------------------------------------------
    def clamp(self, position) -> np.ndarray:
        p = np.asarray(position, dtype=float).copy()
        return np.clip(p, self.bounds[:, 0], self.bounds[:, 1])

    def state(self) -> np.ndarray:
        return self.position - self.centroid

    def encode(self, s) -> np.ndarray:
        return np.asarray(s, dtype=float) / self.config.state_scale

    def discretize(self, s) -> tuple:
        return tuple(int(v) for v in np.round(np.asarray(s) / self.config.step_m))

    # -- dynamics ---------------------------------------------------------
    def channel_rng(self):
        if self.config.freeze_channels:
            return make_rng(self.seed, 0xC4A, 0, 0)
        return make_rng(self.seed, 0xC4A, self.episode + 1, self.t)

    def reset(self, rng=None, position=None, power=None):
        self.episode += 1
        self.t = 0
        if position is not None:
            self.position = self.clamp(position)
        elif self.config.random_start:
            if rng is None:
                raise ValueError("random starts need an rng")
            self.position = rng.uniform(self.bounds[:, 0], self.bounds[:, 1])
        else:
            self.position = self.clamp(self.scenario.uav_start)
        self.power = self.config.start_power_frac * self.p_r_max if power is None else float(power)
        return self.state()

    def evaluate(self, position, power, rng):
        """Relay outcome at ``position`` with budget ``power`` for channels from ``rng``."""
        pool = realize_link_pool(self.scenario, rng, uav_position=position, large_scale=self.large_scale)
        channels = pool.split(self.scenario.gbs_users, self.scenario.ar_users)
        outcome = serve_relay(channels, power, self.scenario.lambda_r_max,
                              formula=self.config.formula, rate_factor=self.config.rate_factor)
        return channels, outcome

    def reward_of(self, outcome) -> float:
        if self.config.reward_mode == "A":
            return outcome.rates.total_capacity
        return outcome.rates.total_secrecy

    def step(self, a: int):
        action = self.actions[a]
        move = np.asarray(MOVES[action.move], dtype=float) * self.config.step_m
        self.position = self.clamp(self.position + move)
        self.power = float(np.clip(self.power + action.power_delta * self.p1, 0.0, self.p_r_max))
        self.t += 1
        channels, outcome = self.evaluate(self.position, self.power, self.channel_rng())
        self.last = outcome
        reward = self.reward_of(outcome)
        info = {"position": self.position.copy(), "power": self.power, "outcome": outcome}
        return self.state(), reward, False, info
