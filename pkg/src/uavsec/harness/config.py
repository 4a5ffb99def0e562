"""Experiment configuration: an INI file layered over built-in defaults.

Powers are given in dB relative to the unit receiver noise, so
``p_b_max_db = 100`` means a transmit power 100 dB above the noise floor.
The defaults describe a desk-scale scenario chosen for this simulator; they
are not published system values.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..channel import A2GParams, G2GParams
from ..numerics import make_rng
from ..rl.dqn import Hyperparams
from ..rl.env import EnvConfig

DEFAULTS = {
    "geometry": {
        "gbs_position": "0, 0, 30",
        "uav_start": "50, 0, 100",
        "x_bounds": "0, 1000",
        "y_bounds": "-200, 200",
        "z_bounds": "60, 200",
    },
    "users": {
        # cluster centers "x, y; x, y; ..." with per_cluster users drawn
        # uniformly in a square of half-width spread around each
        "centers": "350, 0; 800, 0",
        "per_cluster": "4",
        "spread": "30",
        # explicit "x, y, z; ..." list overrides the random drop when set
        "positions": "",
    },
    "eavesdroppers": {
        "positions": "780, 20, 0",
    },
    "radio": {
        "m_antennas": "8",
        "n_antennas": "8",
        "lambda0_db": "-40",
        "alpha": "1.1",
        "beta": "3",
        "carrier_wavelength": "0.125",
        "antenna_separation": "0.0625",
        "rho_g": "3.5",
        "gamma_g": "2.13",
        "intercept_j": "22.4",
        "shadow_sigma": "7.8",
        "carrier_freq": "2.4",
    },
    "power": {
        "p_b_max_db": "100",
        "p_r_max_db": "90",
        "lambda_r_max": "10",
        # "remainder" gives the direct link whatever the relay hop leaves;
        # a number in (0, 1] reserves that share of P_b,max for it
        "direct_share": "remainder",
        "formula": "kkt",
        "rate_factor": "1",
    },
    "wmmse": {
        "max_iters": "100",
        "tol": "1e-6",
    },
    "clustering": {
        "metric": "channel",
        "restarts": "50",
    },
    "env": {
        "step_m": "40",
        "allow_z": "true",
        "power_actions": "true",
        "power_step_frac": "0.1",
        "reward_mode": "A",
        "state_scale": "200",
        "random_start": "true",
    },
    "dqn": {
        "gamma": "0.95",
        "learning_rate": "1e-2",
        "epsilon_start": "1.0",
        "epsilon_end": "0.05",
        "epsilon_decay": "0.99",
        "batch_size": "32",
        "target_update_every": "100",
        "memory_capacity": "10000",
        "episodes": "300",
        "steps_per_episode": "30",
        "hidden": "64, 64",
    },
    "qlearning": {
        "learning_rate": "0.1",
    },
    "run": {
        "horizon": "30",
        "seed": "1",
        "scheme": "Proposed",
    },
    "bench": {
        "seeds": "20",
        "episodes": "300",
        "user_counts": "4",
    },
    "sweep": {
        "gammas": "0.5, 0.9, 0.99",
        "learning_rates": "1e-4, 1e-3, 1e-2",
        "episodes": "100",
    },
    "mobility": {
        "dx": "25",
        "steps": "9",
        "start_x": "680",
        "center_y": "0",
        "users": "4",
        "spread": "15",
        "episodes": "300",
    },
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    gbs_position: np.ndarray
    uav_start: np.ndarray
    bounds: np.ndarray            # 3 x 2: (min, max) per axis
    users: np.ndarray             # K x 3
    eves: np.ndarray              # E x 3
    m_antennas: int
    n_antennas: int
    a2g: A2GParams
    g2g: G2GParams
    p_b_max: float
    p_r_max: float
    lambda_r_max: float
    horizon: int
    seed: int
    gbs_users: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    ar_users: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def k(self) -> int:
        return len(self.users)

    def with_assignment(self, gbs_users, ar_users) -> "Scenario":
        return replace(self, gbs_users=np.asarray(gbs_users, dtype=int),
                       ar_users=np.asarray(ar_users, dtype=int))

    def with_users(self, users) -> "Scenario":
        return replace(self, users=np.asarray(users, dtype=float).reshape(-1, 3))

    def validate(self):
        if self.k < 2:
            raise ConfigError(f"need at least 2 users, got {self.k}")
        lo, hi = self.bounds[:, 0], self.bounds[:, 1]
        ground = np.vstack([self.users, self.eves, self.gbs_position.reshape(1, 3)])
        if np.any(ground[:, :2] < lo[:2]) or np.any(ground[:, :2] > hi[:2]):
            raise ConfigError("users, eavesdroppers and the GBS must lie inside the x/y bounds")
        if np.any(self.uav_start < lo) or np.any(self.uav_start > hi):
            raise ConfigError("uav_start must lie inside the bounds")
        if np.any(self.users[:, 2] < 0) or np.any(self.eves[:, 2] < 0):
            raise ConfigError("ground nodes need z >= 0")
        if self.p_b_max <= 0 or self.p_r_max <= 0 or self.lambda_r_max <= 0:
            raise ConfigError("power budgets and lambda_r_max must be positive")
        if self.horizon < 1:
            raise ConfigError("horizon must be at least 1")


class Config:
    """Typed access to the layered configuration."""

    def __init__(self, parser: configparser.ConfigParser, source: str = "<defaults>"):
        self.parser = parser
        self.source = source

    def get(self, section, key) -> str:
        try:
            return self.parser.get(section, key)
        except (configparser.NoSectionError, configparser.NoOptionError) as exc:
            raise ConfigError(str(exc)) from exc

    def float(self, section, key) -> float:
        try:
            return float(self.get(section, key))
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from exc

    def int(self, section, key) -> int:
        try:
            return int(self.get(section, key))
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from exc

    def bool(self, section, key) -> bool:
        try:
            return self.parser.getboolean(section, key)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from exc

    def floats(self, section, key) -> list[float]:
        raw = self.get(section, key).strip()
        try:
            return [float(v) for v in raw.split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from exc

    def points(self, section, key, dim: int) -> np.ndarray:
        raw = self.get(section, key).strip()
        rows = []
        for chunk in raw.split(";"):
            if not chunk.strip():
                continue
            try:
                vals = [float(v) for v in chunk.split(",")]
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}") from exc
            if len(vals) != dim:
                raise ConfigError(f"[{section}] {key}: expected {dim} coordinates in {chunk!r}")
            rows.append(vals)
        return np.asarray(rows, dtype=float).reshape(-1, dim)

    def set(self, section, key, value):
        if not self.parser.has_section(section):
            self.parser.add_section(section)
        self.parser.set(section, key, str(value))

    def as_dict(self) -> dict:
        return {s: dict(self.parser.items(s)) for s in self.parser.sections()}

    # -- typed views ------------------------------------------------------
    def a2g(self) -> A2GParams:
        return A2GParams(lambda0=10 ** (self.float("radio", "lambda0_db") / 10.0),
                         alpha=self.float("radio", "alpha"), beta=self.float("radio", "beta"),
                         carrier_wavelength=self.float("radio", "carrier_wavelength"),
                         antenna_separation=self.float("radio", "antenna_separation"))

    def g2g(self) -> G2GParams:
        return G2GParams(rho_g=self.float("radio", "rho_g"), gamma_g=self.float("radio", "gamma_g"),
                         intercept_j=self.float("radio", "intercept_j"),
                         shadow_sigma=self.float("radio", "shadow_sigma"),
                         carrier_freq=self.float("radio", "carrier_freq"))

    def env_config(self, **overrides) -> EnvConfig:
        kw = dict(step_m=self.float("env", "step_m"), allow_z=self.bool("env", "allow_z"),
                  power_actions=self.bool("env", "power_actions"),
                  power_step_frac=self.float("env", "power_step_frac"),
                  reward_mode=self.get("env", "reward_mode").strip().upper(),
                  state_scale=self.float("env", "state_scale"),
                  random_start=self.bool("env", "random_start"),
                  formula=self.get("power", "formula").strip(),
                  rate_factor=self.float("power", "rate_factor"))
        kw.update(overrides)
        try:
            return EnvConfig(**kw)
        except ValueError as exc:
            raise ConfigError(f"[env] {exc}") from exc

    def hyperparams(self, **overrides) -> Hyperparams:
        kw = dict(gamma=self.float("dqn", "gamma"), learning_rate=self.float("dqn", "learning_rate"),
                  epsilon_start=self.float("dqn", "epsilon_start"),
                  epsilon_end=self.float("dqn", "epsilon_end"),
                  epsilon_decay=self.float("dqn", "epsilon_decay"),
                  batch_size=self.int("dqn", "batch_size"),
                  target_update_every=self.int("dqn", "target_update_every"),
                  memory_capacity=self.int("dqn", "memory_capacity"),
                  episodes=self.int("dqn", "episodes"),
                  steps_per_episode=self.int("dqn", "steps_per_episode"),
                  hidden=tuple(int(v) for v in self.floats("dqn", "hidden")))
        kw.update(overrides)
        try:
            return Hyperparams(**kw)
        except ValueError as exc:
            raise ConfigError(f"[dqn] {exc}") from exc

    def direct_share(self):
        raw = self.get("power", "direct_share").strip().lower()
        if raw == "remainder":
            return raw
        try:
            share = float(raw)
        except ValueError as exc:
            raise ConfigError(f"[power] direct_share: {exc}") from exc
        if not 0.0 < share <= 1.0:
            raise ConfigError("[power] direct_share must be 'remainder' or lie in (0, 1]")
        return share

    def scenario(self, seed: int, users: np.ndarray | None = None) -> Scenario:
        """Scenario for ``seed``; random user drops come from the seed's own stream."""
        bounds = np.array([self.floats("geometry", f"{ax}_bounds") for ax in "xyz"], dtype=float)
        if bounds.shape != (3, 2) or np.any(bounds[:, 0] > bounds[:, 1]):
            raise ConfigError("bounds must be 'min, max' with min <= max")
        if users is None:
            users = self.draw_users(seed)
        try:
            sc = Scenario(
                gbs_position=np.asarray(self.floats("geometry", "gbs_position"), dtype=float).reshape(3),
                uav_start=np.asarray(self.floats("geometry", "uav_start"), dtype=float).reshape(3),
                bounds=bounds, users=np.asarray(users, dtype=float).reshape(-1, 3),
                eves=self.points("eavesdroppers", "positions", 3),
                m_antennas=self.int("radio", "m_antennas"), n_antennas=self.int("radio", "n_antennas"),
                a2g=self.a2g(), g2g=self.g2g(),
                p_b_max=10 ** (self.float("power", "p_b_max_db") / 10.0),
                p_r_max=10 ** (self.float("power", "p_r_max_db") / 10.0),
                lambda_r_max=self.float("power", "lambda_r_max"),
                horizon=self.int("run", "horizon"), seed=int(seed))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        sc.validate()
        return sc

    def draw_users(self, seed: int, per_cluster: int | None = None) -> np.ndarray:
        explicit = self.points("users", "positions", 3)
        if len(explicit):
            return explicit
        centers = self.points("users", "centers", 2)
        n = self.int("users", "per_cluster") if per_cluster is None else per_cluster
        return scatter_users(centers, n, self.float("users", "spread"), make_rng(seed, 0x05E))


def scatter_users(centers, per_cluster: int, spread: float, rng) -> np.ndarray:
    """``per_cluster`` ground users uniformly in a square around each center."""
    rows = []
    for c in np.asarray(centers, dtype=float).reshape(-1, 2):
        xy = c + rng.uniform(-spread, spread, size=(per_cluster, 2))
        rows.append(np.column_stack([xy, np.zeros(per_cluster)]))
    return np.vstack(rows) if rows else np.zeros((0, 3))


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> Config:
    parser = configparser.ConfigParser(interpolation=None)
    parser.read_dict(DEFAULTS)
    source = "<defaults>"
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
        try:
            parser.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        unknown = [s for s in parser.sections() if s not in DEFAULTS]
        if unknown:
            raise ConfigError(f"{path}: unknown sections {unknown}")
        for section in DEFAULTS:
            extra = set(parser[section]) - set(DEFAULTS[section])
            if extra:
                raise ConfigError(f"{path}: unknown keys in [{section}]: {sorted(extra)}")
        source = str(path)
    cfg = Config(parser, source)
    for (section, key), value in (overrides or {}).items():
        cfg.set(section, key, value)
    return cfg
