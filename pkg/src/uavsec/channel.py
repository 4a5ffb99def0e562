"""Per-slot channel realizations for the GBS / relay / user / eavesdropper links.

Air-to-ground links (GBS->relay, relay->users, relay->eavesdroppers) are
Rician: a deterministic line-of-sight term built from ULA steering vectors
plus i.i.d. CN(0, 1) scattering, scaled by ``sqrt(lambda0) / d**alpha``.
Note the amplitude scaling: received power falls as ``d**(-2 * alpha)``.

Ground-to-ground links (GBS->users, GBS->eavesdroppers) use the ABG
path-loss law for the large-scale gain and i.i.d. Rayleigh small-scale fading.

All arrays lie along the x-axis, so every steering phase depends only on the
direction cosine of the link with respect to x.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .numerics import SeededRng, complex_gaussian


class DomainError(ValueError):
    """Input outside the validity range of a channel model."""


@dataclass(frozen=True)
class A2GParams:
    lambda0: float = 10 ** (-4.0)       # linear gain at 1 m
    alpha: float = 1.1                  # exponent on d in the amplitude
    beta: float = 3.0                   # Rician factor (linear)
    carrier_wavelength: float = 0.125   # m, 2.4 GHz
    antenna_separation: float = 0.0625  # m, half wavelength

    def __post_init__(self):
        if self.lambda0 <= 0 or self.alpha <= 0 or self.beta < 0:
            raise DomainError("A2G parameters need lambda0 > 0, alpha > 0, beta >= 0")


@dataclass(frozen=True)
class G2GParams:
    rho_g: float = 3.5          # distance exponent
    gamma_g: float = 2.13       # frequency exponent
    intercept_j: float = 22.4   # dB
    shadow_sigma: float = 7.8   # dB
    carrier_freq: float = 2.4   # GHz

    def __post_init__(self):
        if self.shadow_sigma < 0:
            raise DomainError("shadow_sigma must be non-negative")


@dataclass(frozen=True)
class ChannelSet:
    h0: np.ndarray   # K_b x M   GBS -> direct users
    h1: np.ndarray   # N x M     GBS -> relay
    h2: np.ndarray   # K_r x N   relay -> relayed users
    h0e: np.ndarray  # E x M     GBS -> eavesdroppers
    h2e: np.ndarray  # E x N     relay -> eavesdroppers

    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        for m in (self.h0, self.h1, self.h2, self.h0e, self.h2e):
            digest.update(np.asarray(m.shape, dtype=np.int64).tobytes())
            digest.update(np.ascontiguousarray(m, dtype=np.complex128).tobytes())
        return digest.hexdigest()


@dataclass(frozen=True)
class LargeScale:
    """G2G path loss per user and per eavesdropper, fixed for one user drop."""

    user_pl_db: np.ndarray
    eve_pl_db: np.ndarray


def _position(p) -> np.ndarray:
    a = np.asarray(p, dtype=float).reshape(3)
    if not np.all(np.isfinite(a)):
        raise DomainError("positions must be finite")
    return a


def link_angles(src, dst) -> tuple[float, float, float]:
    """Return (distance, azimuth, elevation) of ``dst`` seen from ``src``.

    Azimuth is measured on the ground plane from +x; elevation is the angle
    above the ground plane.
    """
    delta = _position(dst) - _position(src)
    d = float(np.linalg.norm(delta))
    if d == 0.0:
        raise DomainError("transmitter and receiver positions coincide")
    azimuth = math.atan2(delta[1], delta[0])
    elevation = math.atan2(delta[2], math.hypot(delta[0], delta[1]))
    return d, azimuth, elevation


def direction_cosine(src, dst) -> float:
    # cos(az) * cos(el) is the projection on the x-oriented array axis; the
    # cos-sin forms of the angle products use the zenith angle in place of el.
    _, az, el = link_angles(src, dst)
    return math.cos(az) * math.cos(el)


def steering_vector(n: int, cosine: float, params: A2GParams) -> np.ndarray:
    phase = 2.0 * math.pi / params.carrier_wavelength * params.antenna_separation * cosine
    return np.exp(-1j * phase * np.arange(n))


def _rician_mix(los: np.ndarray, d: float, params: A2GParams, rng: SeededRng) -> np.ndarray:
    nlos = complex_gaussian(los.shape[0], los.shape[1], 1.0, rng)
    k = params.beta
    if math.isinf(k):
        mixed = los.astype(np.complex128)
    else:
        mixed = math.sqrt(k / (1.0 + k)) * los + math.sqrt(1.0 / (1.0 + k)) * nlos
    return math.sqrt(params.lambda0) / d**params.alpha * mixed


def a2g_mimo_channel(tx_pos, rx_pos, tx_antennas: int, rx_antennas: int,
                     params: A2GParams, rng: SeededRng) -> np.ndarray:
    """Rician MIMO channel (rx_antennas x tx_antennas) between two arrays."""
    d, _, _ = link_angles(tx_pos, rx_pos)
    departure = direction_cosine(tx_pos, rx_pos)
    arrival = direction_cosine(rx_pos, tx_pos)
    los = np.outer(steering_vector(rx_antennas, arrival, params),
                   steering_vector(tx_antennas, departure, params))
    return _rician_mix(los, d, params, rng)


def a2g_miso_channel(tx_pos, rx_pos, tx_antennas: int, params: A2GParams,
                     rng: SeededRng) -> np.ndarray:
    """Rician row (1 x tx_antennas) from an array to a single-antenna node."""
    d, _, _ = link_angles(tx_pos, rx_pos)
    los = steering_vector(tx_antennas, direction_cosine(tx_pos, rx_pos), params).reshape(1, -1)
    return _rician_mix(los, d, params, rng)


def g2g_pathloss_db(d: float, params: G2GParams, rng: SeededRng | None = None) -> float:
    """ABG path loss in dB with one log-normal shadowing draw."""
    if not d >= 1.0:
        raise DomainError(f"ABG model needs d >= 1 m, got {d}")
    pl = (10.0 * params.rho_g * math.log10(d) + params.intercept_j
          + 10.0 * params.gamma_g * math.log10(params.carrier_freq))
    if params.shadow_sigma > 0:
        if rng is None:
            raise ValueError("an rng is required when shadow_sigma > 0")
        pl += params.shadow_sigma * float(rng.standard_normal())
    return pl


def ground_distance(a, b) -> float:
    pa, pb = _position(a), _position(b)
    return max(1.0, float(math.hypot(*(pb[:2] - pa[:2]))))


def g2g_rows(pathloss_db, antennas: int, rng: SeededRng) -> np.ndarray:
    """Rayleigh rows scaled by the ABG linear gain, one row per path loss."""
    pl = np.asarray(pathloss_db, dtype=float).reshape(-1)
    fading = complex_gaussian(pl.size, antennas, 1.0, rng)
    return fading * (10.0 ** (-pl / 20.0))[:, None]


def colocated(users, eves) -> list[tuple[int, int]]:
    """``(eve, user)`` index pairs at the same position; such pairs share one channel."""
    users = np.asarray(users, dtype=float).reshape(-1, 3)
    eves = np.asarray(eves, dtype=float).reshape(-1, 3)
    pairs = []
    for e, pos in enumerate(eves):
        hit = np.flatnonzero(np.all(users == pos, axis=1))
        if hit.size:
            pairs.append((e, int(hit[0])))
    return pairs


def draw_large_scale(scenario, rng: SeededRng) -> LargeScale:
    users = np.asarray(scenario.users, dtype=float).reshape(-1, 3)
    eves = np.asarray(scenario.eves, dtype=float).reshape(-1, 3)
    user_pl = [g2g_pathloss_db(ground_distance(scenario.gbs_position, u), scenario.g2g, rng) for u in users]
    eve_pl = [g2g_pathloss_db(ground_distance(scenario.gbs_position, e), scenario.g2g, rng) for e in eves]
    for e, u in colocated(users, eves):
        eve_pl[e] = user_pl[u]
    return LargeScale(np.asarray(user_pl, dtype=float), np.asarray(eve_pl, dtype=float))


@dataclass(frozen=True)
class LinkPool:
    """Every link of one slot, for all K users, before any cluster split."""

    h0_all: np.ndarray   # K x M
    h1: np.ndarray       # N x M
    h2_all: np.ndarray   # K x N
    h0e: np.ndarray      # E x M
    h2e: np.ndarray      # E x N

    def split(self, gbs_users, ar_users) -> ChannelSet:
        gbs_idx = np.asarray(gbs_users, dtype=int)
        ar_idx = np.asarray(ar_users, dtype=int)
        return ChannelSet(h0=self.h0_all[gbs_idx], h1=self.h1, h2=self.h2_all[ar_idx],
                          h0e=self.h0e, h2e=self.h2e)

    def fingerprint(self) -> str:
        return ChannelSet(self.h0_all, self.h1, self.h2_all, self.h0e, self.h2e).fingerprint()


def realize_link_pool(scenario, rng: SeededRng, *, uav_position=None,
                      large_scale: LargeScale | None = None) -> LinkPool:
    """Draw all links of one slot in a fixed order independent of clustering.

    ``scenario`` supplies ``gbs_position``, ``uav_start``, ``users``, ``eves``,
    ``m_antennas``, ``n_antennas``, ``a2g`` and ``g2g``. ``large_scale`` pins
    the G2G path losses of the current user drop; without it they are redrawn.
    """
    m, n = scenario.m_antennas, scenario.n_antennas
    users = np.asarray(scenario.users, dtype=float).reshape(-1, 3)
    eves = np.asarray(scenario.eves, dtype=float).reshape(-1, 3)
    if large_scale is None:
        large_scale = draw_large_scale(scenario, rng)
    uav = _position(scenario.uav_start if uav_position is None else uav_position)
    gbs = _position(scenario.gbs_position)

    h0_all = g2g_rows(large_scale.user_pl_db, m, rng)
    h0e = g2g_rows(large_scale.eve_pl_db, m, rng)
    h1 = a2g_mimo_channel(gbs, uav, m, n, scenario.a2g, rng)
    h2_all = _miso_rows(uav, users, n, scenario.a2g, rng)
    h2e = _miso_rows(uav, eves, n, scenario.a2g, rng)
    # draws above are kept so the stream does not depend on colocation
    for e, u in colocated(users, eves):
        h0e[e] = h0_all[u]
        h2e[e] = h2_all[u]
    return LinkPool(h0_all=h0_all, h1=h1, h2_all=h2_all, h0e=h0e, h2e=h2e)


def _miso_rows(tx, points: np.ndarray, n: int, params: A2GParams, rng: SeededRng) -> np.ndarray:
    if len(points) == 0:
        return np.zeros((0, n), dtype=np.complex128)
    return np.vstack([a2g_miso_channel(tx, p, n, params, rng) for p in points])


def realize_channels(scenario, rng: SeededRng, *, uav_position=None,
                     large_scale: LargeScale | None = None) -> ChannelSet:
    """One slot of channels split by ``scenario.gbs_users`` / ``scenario.ar_users``."""
    pool = realize_link_pool(scenario, rng, uav_position=uav_position, large_scale=large_scale)
    return pool.split(scenario.gbs_users, scenario.ar_users)
