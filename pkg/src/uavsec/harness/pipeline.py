"""Experiment orchestration: proposed scheme, benchmarks, mobility sweep.

Every random draw comes from a stream keyed by (seed, purpose[, index]), so
schemes evaluated in the same run see bit-identical channels and a run is
reproducible from (config, seed) alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..beamforming import InfeasibleError
from ..capacity import LinkRates, secrecy_summary
from ..channel import ChannelSet, LargeScale, draw_large_scale, realize_link_pool
from ..clustering import ClusterAssignment, cluster_users, extract_features
from ..numerics import derive_seed, make_rng
from ..rl.dqn import dqn_train, greedy_action
from ..rl.env import UavRelayEnv
from ..rl.network import QNetwork
from ..stages import serve_direct, serve_relay
from .config import Config, Scenario, scatter_users

SCHEMES = ("Proposed", "UAV_NoBF", "NoUAV_BF", "NoUAV_NoBF")

# stream purposes
LARGE_SCALE, CLUSTER_CHANNELS, KMEANS, ENV, TRAIN, SLOT, MOBILITY = range(101, 108)


@dataclass
class SchemeResult:
    scheme: str
    seed: int
    total_secrecy: float
    c_sec_b: float
    c_sec_r: float
    per_user_secrecy: list[float]
    cluster_sizes: tuple[int, int]
    trajectory: list[list[float]] = field(default_factory=list)
    per_slot: list[float] = field(default_factory=list)
    fingerprints: list[str] = field(default_factory=list)
    metric: str = "channel"

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme, "seed": self.seed, "metric": self.metric,
            "total_secrecy": self.total_secrecy, "c_sec_b": self.c_sec_b, "c_sec_r": self.c_sec_r,
            "cluster_sizes": list(self.cluster_sizes), "per_user_secrecy": self.per_user_secrecy,
            "per_slot": self.per_slot, "trajectory": self.trajectory,
        }


@dataclass
class RunArtifacts:
    results: list[SchemeResult]
    scenario: Scenario
    assignment: ClusterAssignment
    network: QNetwork | None
    training_log: list


def _direct_budget(share, p_b_max: float, relay_gbs_power: float) -> float:
    if share == "remainder":
        return max(p_b_max - relay_gbs_power, 0.0)
    return share * p_b_max


def _direct(channels: ChannelSet, p: float, beamforming: bool, cfg: Config) -> LinkRates:
    if p <= 0 or channels.h0.shape[0] == 0:
        k = channels.h0.shape[0]
        return LinkRates.from_sinr(np.zeros(k), np.zeros(k))
    return serve_direct(channels, p, beamforming, max_iters=cfg.int("wmmse", "max_iters"),
                        tol=cfg.float("wmmse", "tol"))


def assign_clusters(cfg: Config, scenario: Scenario, large_scale: LargeScale,
                    metric: str | None = None) -> tuple[Scenario, ClusterAssignment]:
    metric = metric or cfg.get("clustering", "metric").strip()
    pool = realize_link_pool(scenario, make_rng(scenario.seed, CLUSTER_CHANNELS), large_scale=large_scale)
    features = extract_features(scenario, pool, metric)
    assignment = cluster_users(features, 2, make_rng(scenario.seed, KMEANS), metric,
                               restarts=cfg.int("clustering", "restarts"))
    k_b, k_r = assignment.sizes
    if k_b > scenario.m_antennas:
        raise InfeasibleError("H0", f"{k_b} direct users exceed M = {scenario.m_antennas}")
    if k_r > scenario.n_antennas:
        raise InfeasibleError("H2", f"{k_r} relayed users exceed N = {scenario.n_antennas}")
    return scenario.with_assignment(assignment.gbs_users, assignment.ar_users), assignment


def make_env(cfg: Config, scenario: Scenario, large_scale: LargeScale, **overrides) -> UavRelayEnv:
    return UavRelayEnv(scenario, cfg.env_config(**overrides), seed=derive_seed(scenario.seed, ENV),
                       large_scale=large_scale)


def train_policy(cfg: Config, scenario: Scenario, large_scale: LargeScale, episodes: int | None = None):
    hp = cfg.hyperparams() if episodes is None else cfg.hyperparams(episodes=episodes)
    env = make_env(cfg, scenario, large_scale)
    result = dqn_train(env, hp, make_rng(scenario.seed, TRAIN))
    return result.network, result.log


def fly(cfg: Config, scenario: Scenario, large_scale: LargeScale, network: QNetwork,
        start=None) -> list[tuple[np.ndarray, float]]:
    """Greedy flight over the horizon; returns (position, relay budget) per slot."""
    env = make_env(cfg, scenario, large_scale, random_start=False)
    s = env.reset(position=scenario.uav_start if start is None else start)
    path = []
    for _ in range(scenario.horizon):
        a = greedy_action(network.forward(env.encode(s))[0])
        s, _, _, info = env.step(a)
        path.append((info["position"], info["power"]))
    return path


def evaluate_schemes(cfg: Config, scenario: Scenario, assignment: ClusterAssignment,
                     large_scale: LargeScale, path, schemes=SCHEMES) -> list[SchemeResult]:
    """Evaluate each scheme over the same per-slot channel draws."""
    share = cfg.direct_share()
    formula = cfg.get("power", "formula").strip()
    rate_factor = cfg.float("power", "rate_factor")
    k = scenario.k
    gbs, ar = scenario.gbs_users, scenario.ar_users
    slots = {name: ([], []) for name in schemes}
    prints = []
    for t, (position, budget) in enumerate(path):
        pool = realize_link_pool(scenario, make_rng(scenario.seed, SLOT, t), uav_position=position,
                                 large_scale=large_scale)
        prints.append(pool.fingerprint())
        split = pool.split(gbs, ar)
        everyone = ChannelSet(h0=pool.h0_all, h1=pool.h1, h2=pool.h2_all[:0], h0e=pool.h0e, h2e=pool.h2e)
        relay = None
        if {"Proposed", "UAV_NoBF"} & set(schemes):
            try:
                relay = serve_relay(split, budget, scenario.lambda_r_max, formula, rate_factor)
            except InfeasibleError as exc:
                raise InfeasibleError(exc.channel, f"slot {t}: {exc}") from exc
            p_direct = _direct_budget(share, scenario.p_b_max, relay.gbs_power)
        for name in schemes:
            if name in ("Proposed", "UAV_NoBF"):
                d = _direct(split, p_direct, name == "Proposed", cfg)
                r = relay.rates
            else:
                d = _direct(everyone, scenario.p_b_max, name == "NoUAV_BF", cfg)
                r = LinkRates.empty()
            slots[name][0].append(d)
            slots[name][1].append(r)

    out = []
    for name in schemes:
        direct, relay_rates = slots[name]
        summary = secrecy_summary(direct, relay_rates)
        per_user = np.zeros(k)
        if name.startswith("NoUAV"):
            per_user += np.mean([d.secrecy_per_user for d in direct], axis=0)
            sizes = (k, 0)
            trajectory = []
        else:
            if len(gbs):
                per_user[gbs] += np.mean([d.secrecy_per_user for d in direct], axis=0)
            if len(ar):
                per_user[ar] += np.mean([r.secrecy_per_user for r in relay_rates], axis=0)
            sizes = assignment.sizes
            trajectory = [[float(v) for v in p] + [float(b)] for p, b in path]
        out.append(SchemeResult(
            scheme=name, seed=scenario.seed, total_secrecy=summary.c_total, c_sec_b=summary.c_sec_b,
            c_sec_r=summary.c_sec_r, per_user_secrecy=[float(v) for v in per_user], cluster_sizes=sizes,
            trajectory=trajectory, per_slot=[c for _, c in summary.per_slot_trace],
            fingerprints=list(prints), metric=assignment.metric))
    return out


def run_pipeline(cfg: Config, seed: int, schemes=SCHEMES, metric: str | None = None,
                 episodes: int | None = None, network: QNetwork | None = None,
                 users=None) -> RunArtifacts:
    scenario = cfg.scenario(seed, users=users)
    large_scale = draw_large_scale(scenario, make_rng(seed, LARGE_SCALE))
    scenario, assignment = assign_clusters(cfg, scenario, large_scale, metric)
    log = []
    needs_uav = any(not s.startswith("NoUAV") for s in schemes)
    if needs_uav and network is None:
        network, log = train_policy(cfg, scenario, large_scale, episodes)
    path = fly(cfg, scenario, large_scale, network) if needs_uav else \
        [(scenario.uav_start, scenario.p_r_max)] * scenario.horizon
    results = evaluate_schemes(cfg, scenario, assignment, large_scale, path, schemes)
    return RunArtifacts(results, scenario, assignment, network, log)


def run_proposed(cfg: Config, seed: int, **kw) -> SchemeResult:
    return run_pipeline(cfg, seed, schemes=("Proposed",), **kw).results[0]


def run_benchmarks(cfg: Config, seed: int, **kw) -> list[SchemeResult]:
    return run_pipeline(cfg, seed, schemes=SCHEMES, **kw).results


@dataclass
class MobilityRun:
    center_x: list[float]
    results: list[SchemeResult]
    partial: bool
    eve_x: list[float]
    training_log: list

    def totals(self) -> list[float]:
        return [r.total_secrecy for r in self.results]


def run_mobility(cfg: Config, seed: int, dx: float | None = None, steps: int | None = None,
                 network: QNetwork | None = None) -> MobilityRun:
    """Move the user group along +x by ``dx`` per step and rerun the proposed pipeline.

    Users are re-drawn about the new center each step; the relay keeps
    flying from where the previous step left it. A single policy (trained
    on the first step unless given) is reused, since its input is relative
    to the served cluster.
    """
    dx = cfg.float("mobility", "dx") if dx is None else float(dx)
    steps = cfg.int("mobility", "steps") if steps is None else int(steps)
    if not dx > 0:
        raise ValueError("dx must be positive")
    n_users = cfg.int("mobility", "users")
    spread = cfg.float("mobility", "spread")
    cy = cfg.float("mobility", "center_y")
    x0 = cfg.float("mobility", "start_x")
    base = cfg.scenario(seed, users=np.zeros((2, 3)) + [x0, cy, 0.0])
    lo, hi = base.bounds[0]
    eve_pl = None
    centers, results, log = [], [], []
    partial = False
    start = None
    for i in range(steps):
        cx = x0 + i * dx
        if cx - spread < lo or cx + spread > hi:
            partial = True
            break
        users = scatter_users([[cx, cy]], n_users, spread, make_rng(seed, MOBILITY, i))
        scenario = base.with_users(users)
        drawn = draw_large_scale(scenario, make_rng(seed, MOBILITY, i, 1))
        if eve_pl is None:
            eve_pl = drawn.eve_pl_db
        large_scale = LargeScale(drawn.user_pl_db, eve_pl)
        scenario, assignment = assign_clusters(cfg, scenario, large_scale)
        if network is None:
            network, log = train_policy(cfg, scenario, large_scale, cfg.int("mobility", "episodes"))
        path = fly(cfg, scenario, large_scale, network, start=start)
        start = path[-1][0]
        results.extend(evaluate_schemes(cfg, scenario, assignment, large_scale, path, ("Proposed",)))
        centers.append(cx)
    return MobilityRun(centers, results, partial, [float(e[0]) for e in base.eves], log)
