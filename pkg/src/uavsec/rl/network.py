"""Fully connected Q-value network with hand-written backpropagation."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


class QNetwork:
    """ReLU hidden layers, linear output; one Q-value per action.

    Parameters are kept in ``self.params`` as ``[W0, b0, W1, b1, ...]`` with
    ``W_i`` of shape (fan_in, fan_out).
    """

    def __init__(self, sizes, rng: np.random.Generator | None = None):
        sizes = [int(s) for s in sizes]
        if len(sizes) < 2 or min(sizes) < 1:
            raise ValueError(f"bad layer sizes {sizes}")
        self.sizes = sizes
        self.params: list[np.ndarray] = []
        if rng is None:
            rng = np.random.default_rng(0)
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            self.params.append(rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in))
            self.params.append(np.zeros(fan_out))

    @property
    def n_layers(self) -> int:
        return len(self.sizes) - 1

    def forward(self, x) -> np.ndarray:
        return self.forward_cached(x)[0]

    def forward_cached(self, x):
        a = np.atleast_2d(np.asarray(x, dtype=float))
        cache = [a]
        for i in range(self.n_layers):
            z = a @ self.params[2 * i] + self.params[2 * i + 1]
            a = z if i == self.n_layers - 1 else np.maximum(z, 0.0)
            cache.append(a)
        return a, cache

    def backward(self, cache, d_out: np.ndarray) -> list[np.ndarray]:
        """Gradients of a scalar loss given its gradient ``d_out`` w.r.t. the outputs."""
        grads: list[np.ndarray] = [None] * len(self.params)
        delta = d_out
        for i in reversed(range(self.n_layers)):
            a_in = cache[i]
            grads[2 * i] = a_in.T @ delta
            grads[2 * i + 1] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.params[2 * i].T) * (cache[i] > 0)
        return grads

    def sgd_step(self, grads, lr: float):
        for p, g in zip(self.params, grads):
            p -= lr * g

    def copy(self) -> "QNetwork":
        other = QNetwork.__new__(QNetwork)
        other.sizes = list(self.sizes)
        other.params = [p.copy() for p in self.params]
        return other

    def load_from(self, other: "QNetwork"):
        for dst, src in zip(self.params, other.params):
            dst[...] = src

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.params)

    def to_dict(self) -> dict:
        layers = []
        for i in range(self.n_layers):
            w, b = self.params[2 * i], self.params[2 * i + 1]
            layers.append({"shape": list(w.shape), "weights": w.ravel().tolist(), "bias": b.tolist()})
        return {"sizes": self.sizes, "activation": "relu", "layers": layers}

    @classmethod
    def from_dict(cls, data: dict) -> "QNetwork":
        net = cls.__new__(cls)
        net.sizes = list(data["sizes"])
        net.params = []
        for layer in data["layers"]:
            net.params.append(np.asarray(layer["weights"], dtype=float).reshape(layer["shape"]))
            net.params.append(np.asarray(layer["bias"], dtype=float))
        return net

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "QNetwork":
        return cls.from_dict(json.loads(Path(path).read_text()))
