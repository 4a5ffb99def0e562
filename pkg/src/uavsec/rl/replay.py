"""Bounded FIFO replay memory for DQN training."""

from __future__ import annotations

from collections import deque
from typing import NamedTuple

import numpy as np


class Experience(NamedTuple):
    s: np.ndarray
    a: int
    r: float
    s_next: np.ndarray
    terminal: bool


class ReplayMemory:
    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be at least 1")
        self.capacity = capacity
        self.buffer: deque[Experience] = deque(maxlen=capacity)

    def push(self, s, a, r, s_next, terminal=False):
        if not np.isfinite(r):
            raise ValueError(f"non-finite reward {r}")
        self.buffer.append(Experience(np.asarray(s, dtype=float), int(a), float(r),
                                      np.asarray(s_next, dtype=float), bool(terminal)))

    def sample(self, batch_size: int, rng: np.random.Generator):
        """Uniform sample without replacement, stacked into arrays."""
        idx = rng.choice(len(self.buffer), size=batch_size, replace=False)
        batch = [self.buffer[i] for i in idx]
        s, a, r, s_next, terminal = zip(*batch)
        return (np.stack(s), np.asarray(a, dtype=int), np.asarray(r, dtype=float),
                np.stack(s_next), np.asarray(terminal, dtype=bool))

    def __len__(self):
        return len(self.buffer)
