"""Tiny deterministic environments with known optimal values, used as oracles."""

from __future__ import annotations

import numpy as np


class ChainEnv:
    """States 0..n-1 on a line; actions 0 = left, 1 = right.

    Every step that lands on (or stays at) the right end pays 1. There is no
    terminal state, episodes are simply truncated.
    """

    n_actions = 2

    def __init__(self, n_states: int = 5):
        self.n_states = n_states
        self.state_dim = n_states
        self.pos = 0

    def model(self, s: int, a: int):
        s2 = min(s + 1, self.n_states - 1) if a == 1 else max(s - 1, 0)
        return s2, float(s2 == self.n_states - 1), False

    def reset(self, rng, position=None):
        self.pos = int(rng.integers(self.n_states)) if position is None else int(position)
        return self.pos

    def step(self, a: int):
        self.pos, r, done = self.model(self.pos, a)
        return self.pos, r, done, {}

    def discretize(self, s):
        return int(s)

    def encode(self, s):
        return np.eye(self.n_states)[int(s)]


class GridWorld:
    """``size x size`` grid, moves up/down/left/right clamp at the walls.

    Reaching the goal corner pays 1 and ends the episode; every other step
    pays 0. With discount below one the optimal policy is any shortest path.
    """

    n_actions = 4
    MOVES = ((0, 1), (0, -1), (1, 0), (-1, 0))

    def __init__(self, size: int = 5):
        self.size = size
        self.goal = (size - 1, size - 1)
        self.state_dim = size * size
        self.pos = (0, 0)

    def index(self, cell) -> int:
        return cell[0] * self.size + cell[1]

    def cell(self, index: int):
        return divmod(int(index), self.size)

    def model(self, s: int, a: int):
        x, y = self.cell(s)
        dx, dy = self.MOVES[a]
        nxt = (min(max(x + dx, 0), self.size - 1), min(max(y + dy, 0), self.size - 1))
        hit = nxt == self.goal
        return self.index(nxt), float(hit), hit

    def reset(self, rng, position=None):
        if position is None:
            choices = [i for i in range(self.state_dim) if self.cell(i) != self.goal]
            position = choices[int(rng.integers(len(choices)))]
        self.pos = int(position)
        return self.pos

    def step(self, a: int):
        self.pos, r, done = self.model(self.pos, a)
        return self.pos, r, done, {}

    def discretize(self, s):
        return int(s)

    def encode(self, s):
        return np.eye(self.state_dim)[int(s)]

    def shortest_path(self, s: int) -> int:
        x, y = self.cell(s)
        return (self.goal[0] - x) + (self.goal[1] - y)
