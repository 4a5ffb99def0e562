"""Split users into a GBS-served cluster and a relay-served cluster.

Users are grouped by k-means over one of three feature spaces:

distance   3D distance to the GBS (one scalar per user)
rate       direct-link rate when the GBS serves everyone with equal-power
           matched beams (one scalar per user)
channel    per-antenna GBS channel magnitudes in dB, normalized to the
           strongest entry over all users (M values per user)

The cluster with the weaker mean direct-link quality goes to the relay.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .beamforming import mrt_precoder
from .capacity import direct_link_rates
from .numerics import SeededRng

METRICS = ("distance", "rate", "channel")
CHANNEL_FLOOR_DB = -300.0


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray
    gbs_cluster: int
    ar_cluster: int
    metric: str
    degenerate: bool = False

    @property
    def gbs_users(self) -> np.ndarray:
        return np.flatnonzero(self.labels == self.gbs_cluster)

    @property
    def ar_users(self) -> np.ndarray:
        return np.flatnonzero(self.labels == self.ar_cluster)

    @property
    def sizes(self) -> tuple[int, int]:
        return len(self.gbs_users), len(self.ar_users)


def extract_features(scenario, channels, metric: str) -> np.ndarray:
    """Per-user feature rows (K x d) for ``metric``.

    ``channels`` only needs an ``h0_all``-like attribute: either a
    ``LinkPool`` (``h0_all``) or anything with ``h0`` covering all K users.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown clustering metric {metric!r}")
    users = np.asarray(scenario.users, dtype=float).reshape(-1, 3)
    if metric == "distance":
        gbs = np.asarray(scenario.gbs_position, dtype=float)
        return np.linalg.norm(users - gbs, axis=1).reshape(-1, 1)

    h = np.asarray(channels.h0_all if hasattr(channels, "h0_all") else channels.h0)
    if h.shape[0] != len(users):
        raise ValueError(f"channel has {h.shape[0]} rows for {len(users)} users")
    if metric == "rate":
        w = mrt_precoder(h, scenario.p_b_max)
        rates = direct_link_rates(h, np.zeros((0, h.shape[1])), w).capacity_per_user
        return rates.reshape(-1, 1)

    mag = np.abs(h)
    peak = mag.max() if mag.size else 0.0
    if peak == 0.0:
        return np.full(mag.shape, CHANNEL_FLOOR_DB)
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(mag / peak)
    return np.maximum(db, CHANNEL_FLOOR_DB)


def quality(features: np.ndarray, metric: str) -> np.ndarray:
    """Per-user direct-link quality implied by the features; larger is better."""
    f = np.asarray(features, dtype=float)
    if metric == "distance":
        return -f[:, 0]
    return f.mean(axis=1)


# ---------------------------------------------------------------------------
# k-means
# ---------------------------------------------------------------------------

def _sq_dist(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    return ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _kmeans_pp(x: np.ndarray, k: int, rng: SeededRng) -> np.ndarray:
    centers = [x[rng.integers(len(x))]]
    for _ in range(1, k):
        d2 = _sq_dist(x, np.asarray(centers)).min(axis=1)
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(len(x))
        else:
            idx = rng.choice(len(x), p=d2 / total)
        centers.append(x[idx])
    return np.asarray(centers, dtype=float)


def lloyd(x: np.ndarray, centers: np.ndarray, max_iters: int = 300):
    """Lloyd iterations until the assignment stops changing.

    Returns ``(labels, centers, inertia_history)``.
    """
    centers = centers.copy()
    labels = np.full(len(x), -1)
    history = []
    for _ in range(max_iters):
        d2 = _sq_dist(x, centers)
        new = d2.argmin(axis=1)
        history.append(float(d2[np.arange(len(x)), new].sum()))
        if np.array_equal(new, labels):
            break
        labels = new
        for c in range(len(centers)):
            members = x[labels == c]
            if len(members):
                centers[c] = members.mean(axis=0)
            else:
                # revive an empty cluster at the point worst served
                far = d2[np.arange(len(x)), labels].argmax()
                centers[c] = x[far]
    return labels, centers, history


def within_cluster_ss(x: np.ndarray, labels: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    total = 0.0
    for c in np.unique(labels):
        members = x[labels == c]
        total += float(((members - members.mean(axis=0)) ** 2).sum())
    return total


def kmeans(x, k: int, rng: SeededRng, restarts: int = 50):
    """Best-of-``restarts`` k-means with k-means++ seeding; returns ``(labels, inertia)``."""
    x = np.asarray(x, dtype=float)
    best_labels, best_inertia = None, np.inf
    for _ in range(restarts):
        labels, _, history = lloyd(x, _kmeans_pp(x, k, rng))
        inertia = within_cluster_ss(x, labels)
        if best_labels is None or inertia < best_inertia - 1e-12 * max(1.0, best_inertia):
            best_labels, best_inertia = labels, inertia
    return best_labels, best_inertia


def cluster_users(features, k: int = 2, rng: SeededRng | None = None, metric: str = "channel",
                  restarts: int = 50) -> ClusterAssignment:
    """Cluster users and map the weakest cluster to the relay.

    Labels are renumbered by descending mean quality, so the GBS cluster is 0
    and the relay cluster is ``k - 1``. The result does not depend on the
    order in which users are listed.
    """
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    n = len(x)
    if n < k:
        raise ValueError(f"need at least {k} users, got {n}")
    if rng is None:
        rng = np.random.default_rng(0)

    if np.all(x == x[0]):
        warnings.warn("all users have identical features; splitting by index", RuntimeWarning)
        labels = np.minimum(np.arange(n) * k // n, k - 1)
        return ClusterAssignment(labels, 0, k - 1, metric, degenerate=True)

    order = np.lexsort(x.T[::-1])
    raw_sorted, _ = kmeans(x[order], k, rng, restarts)
    raw = np.empty(n, dtype=int)
    raw[order] = raw_sorted

    q = quality(x, metric)
    means = np.array([q[raw == c].mean() if np.any(raw == c) else -np.inf for c in range(k)])
    # stable sort keeps the smaller raw index first on ties
    rank = np.argsort(-means, kind="stable")
    relabel = np.empty(k, dtype=int)
    relabel[rank] = np.arange(k)
    return ClusterAssignment(relabel[raw], 0, k - 1, metric)
