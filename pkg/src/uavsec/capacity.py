"""SINR, capacity and secrecy-capacity evaluation for both transmission modes.

Noise has unit variance at every receiver. Eavesdropper rates are computed
per beam: the eavesdropper tries to decode beam k treating the other beams
(and, on the relay link, the forwarded relay noise) as interference. With
several eavesdroppers the strongest one counts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class LinkRates:
    sinr_per_user: np.ndarray
    capacity_per_user: np.ndarray
    eve_capacity_per_user: np.ndarray
    secrecy_per_user: np.ndarray

    @classmethod
    def from_sinr(cls, sinr, eve_sinr, rate_factor: float = 1.0) -> "LinkRates":
        sinr = np.asarray(sinr, dtype=float)
        eve = np.asarray(eve_sinr, dtype=float)
        cap = rate_factor * np.log2(1.0 + sinr)
        eve_cap = rate_factor * np.log2(1.0 + eve)
        return cls(sinr, cap, eve_cap, np.maximum(cap - eve_cap, 0.0))

    @property
    def total_capacity(self) -> float:
        return float(np.sum(self.capacity_per_user))

    @property
    def total_secrecy(self) -> float:
        return float(np.sum(self.secrecy_per_user))

    @classmethod
    def empty(cls) -> "LinkRates":
        z = np.zeros(0)
        return cls(z, z, z, z)


def _per_beam_sinr(gains: np.ndarray, extra_noise: np.ndarray | float = 0.0) -> np.ndarray:
    """SINR of beam k at a receiver whose effective per-beam gains are ``gains``.

    ``gains`` is (receivers x beams); the result is (receivers x beams).
    """
    power = np.abs(gains) ** 2
    total = power.sum(axis=1, keepdims=True)
    noise = 1.0 + np.reshape(extra_noise, (-1, 1))
    return power / (total - power + noise)


def _worst_eve(eve_sinr: np.ndarray, beams: int) -> np.ndarray:
    if eve_sinr.shape[0] == 0:
        return np.zeros(beams)
    return eve_sinr.max(axis=0)


def direct_link_rates(h0, h0e, w_bk, rate_factor: float = 1.0) -> LinkRates:
    """Per-user rates of the GBS direct link with precoder ``w_bk`` (M x K_b)."""
    h0 = np.asarray(h0, dtype=np.complex128)
    h0e = np.asarray(h0e, dtype=np.complex128)
    w = np.asarray(w_bk, dtype=np.complex128)
    k = h0.shape[0]
    if w.shape != (h0.shape[1], k):
        raise DomainError(f"precoder shape {w.shape} does not match h0 {h0.shape}")
    if h0e.shape[0] and h0e.shape[1] != h0.shape[1]:
        raise DomainError(f"h0e has {h0e.shape[1]} columns, expected {h0.shape[1]}")
    if k == 0:
        return LinkRates.empty()
    g = h0 @ w
    power = np.abs(g) ** 2
    signal = np.diag(power)
    sinr = signal / (power.sum(axis=1) - signal + 1.0)
    eve = _worst_eve(_per_beam_sinr(h0e.reshape(-1, h0.shape[1]) @ w), k)
    return LinkRates.from_sinr(sinr, eve, rate_factor)


def relay_link_rates(h2, h2e, w_r, h1, w_br, rate_factor: float = 1.0) -> LinkRates:
    """Per-user rates of the relayed link, including amplified relay noise."""
    h2 = np.asarray(h2, dtype=np.complex128)
    h2e = np.asarray(h2e, dtype=np.complex128)
    w_r = np.asarray(w_r, dtype=np.complex128)
    h1 = np.asarray(h1, dtype=np.complex128)
    w_br = np.asarray(w_br, dtype=np.complex128)
    k, n = h2.shape
    if w_r.shape != (n, n) or h1.shape[0] != n or w_br.shape != (h1.shape[1], k):
        raise DomainError(
            f"inconsistent relay shapes: h2 {h2.shape}, w_r {w_r.shape}, h1 {h1.shape}, w_br {w_br.shape}")
    if h2e.shape[0] and h2e.shape[1] != n:
        raise DomainError(f"h2e has {h2e.shape[1]} columns, expected {n}")
    if k == 0:
        return LinkRates.empty()
    front = h1 @ w_br
    shaped = h2 @ w_r
    g = shaped @ front
    power = np.abs(g) ** 2
    signal = np.diag(power)
    relay_noise = np.sum(np.abs(shaped) ** 2, axis=1)
    sinr = signal / (power.sum(axis=1) - signal + relay_noise + 1.0)

    shaped_e = h2e.reshape(-1, n) @ w_r
    eve_noise = np.sum(np.abs(shaped_e) ** 2, axis=1)
    eve = _worst_eve(_per_beam_sinr(shaped_e @ front, eve_noise), k)
    return LinkRates.from_sinr(sinr, eve, rate_factor)


@dataclass(frozen=True)
class SecrecySummary:
    c_sec_b: float
    c_sec_r: float
    c_total: float
    per_slot_trace: list[tuple[int, float]] = field(default_factory=list)


def secrecy_summary(direct: Sequence[LinkRates], relay: Sequence[LinkRates]) -> SecrecySummary:
    """Time-averaged sum secrecy of both clusters over the slots given."""
    horizon = len(direct)
    if horizon == 0:
        raise DomainError("secrecy_summary needs at least one slot")
    if len(relay) != horizon:
        raise DomainError(f"{horizon} direct slots but {len(relay)} relay slots")
    b = [d.total_secrecy for d in direct]
    r = [x.total_secrecy for x in relay]
    trace = [(t + 1, b[t] + r[t]) for t in range(horizon)]
    c_b = float(np.mean(b))
    c_r = float(np.mean(r))
    return SecrecySummary(c_sec_b=c_b, c_sec_r=c_r, c_total=c_b + c_r, per_slot_trace=trace)
