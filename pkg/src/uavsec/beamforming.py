"""GBS direct-link precoding and relay beamforming / power control.

Three pieces live here:

* ``wmmse_precoder`` -- the weighted-MMSE alternating loop for the users the
  GBS serves directly.
* ``zf_construct`` -- SVD-based zero-forcing matrices for the GBS->relay and
  relay->user hops, which turn the relayed link into ``Lambda_r s + Lambda_r n1 + n2``.
* ``optimal_relay_power`` -- the KKT water-filling over the per-stream relay
  gains ``lambda_r`` under the relay power budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import NumericalError, as_complex_matrix, svd

LN2 = math.log(2.0)
RANK_TOL = 1e-10


class DimensionError(ValueError):
    pass


class InfeasibleError(ValueError):
    """Zero-forcing is impossible because a channel is rank deficient."""

    def __init__(self, channel: str, detail: str):
        super().__init__(f"{channel} is rank deficient: {detail}")
        self.channel = channel


# ---------------------------------------------------------------------------
# Direct link: WMMSE
# ---------------------------------------------------------------------------

def _direct_sinr(h: np.ndarray, w: np.ndarray) -> np.ndarray:
    g = np.abs(h @ w) ** 2
    signal = np.diag(g)
    return signal / (g.sum(axis=1) - signal + 1.0)


def sum_rate(h: np.ndarray, w: np.ndarray) -> float:
    if h.shape[0] == 0:
        return 0.0
    return float(np.sum(np.log2(1.0 + _direct_sinr(h, w))))


def mrt_precoder(h0, p_max: float) -> np.ndarray:
    """Equal-power matched single-user beams, ``sqrt(P/K) h_k^H / ||h_k||``."""
    h = as_complex_matrix(h0, "h0")
    k = h.shape[0]
    w = np.zeros((h.shape[1], k), dtype=np.complex128)
    if k == 0:
        return w
    norms = np.linalg.norm(h, axis=1)
    live = norms > 0
    w[:, live] = h[live].conj().T / norms[live] * math.sqrt(p_max / k)
    return w


def wmmse_trace(h0, p_b_max: float, max_iters: int = 100, tol: float = 1e-6):
    """Run the WMMSE loop and return ``(W, rates)``.

    ``rates[0]`` is the sum rate of the initial precoder (``W`` proportional
    to ``H0^H`` at full power); ``rates[t]`` the sum rate after iteration t.
    """
    h = np.asarray(h0, dtype=np.complex128)
    if h.ndim != 2:
        raise DimensionError("h0 must be a K_b x M matrix")
    k, m = h.shape
    if k > m:
        raise DimensionError(f"WMMSE needs K_b <= M, got K_b={k}, M={m}")
    if not np.all(np.isfinite(h)):
        raise ValueError("h0 has non-finite entries")
    if p_b_max <= 0:
        raise ValueError("p_b_max must be positive")
    fro = np.linalg.norm(h)
    if k == 0 or fro == 0.0:
        return np.zeros((m, k), dtype=np.complex128), [0.0]

    w = h.conj().T * (math.sqrt(p_b_max) / fro)
    rates = [sum_rate(h, w)]
    eye = np.eye(m)
    for _ in range(max_iters):
        g = h @ w
        total = np.sum(np.abs(g) ** 2, axis=1) + 1.0
        direct = np.diag(g)
        q = direct.conj() / total
        mse = 1.0 - np.abs(direct) ** 2 / total
        f = 1.0 / np.maximum(mse, 1e-300)
        qh = q[:, None] * h                         # Q H0
        a = qh.conj().T @ (f[:, None] * qh)          # H0^H Q^H F Q H0
        reg = float(np.sum(f * np.abs(q) ** 2)) / p_b_max
        rhs = qh.conj().T * f[None, :]               # H0^H Q^H F
        w_new = np.linalg.solve(a + reg * eye, rhs)
        norm = np.linalg.norm(w_new)
        if not np.isfinite(norm) or norm == 0.0:
            raise NumericalError("WMMSE update produced a degenerate precoder")
        w = w_new * (math.sqrt(p_b_max) / norm)
        rates.append(sum_rate(h, w))
        if abs(rates[-1] - rates[-2]) < tol:
            break
    return w, rates


def wmmse_precoder(h0, p_b_max: float, max_iters: int = 100, tol: float = 1e-6) -> np.ndarray:
    """WMMSE precoder ``W_bk`` (M x K_b) with ``||W||_F^2 = p_b_max``."""
    return wmmse_trace(h0, p_b_max, max_iters, tol)[0]


# ---------------------------------------------------------------------------
# Relay link: zero-forcing construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ZfConstruction:
    w_br: np.ndarray          # M x K_r
    w_r: np.ndarray           # N x N
    lambda_b: np.ndarray      # K_r x K_r
    lambda_r_hat: np.ndarray  # K_r x K_r
    lambda_r: np.ndarray      # K_r
    u2: np.ndarray            # K_r x K_r
    sigma2: np.ndarray        # K_r

    def end_to_end(self, h1, h2) -> np.ndarray:
        return h2 @ self.w_r @ h1 @ self.w_br


def _polar_unitary(a: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(a)
    return u @ vh


def zf_construct(h1, h2, lambda_r) -> ZfConstruction:
    """Zero-forcing GBS->relay and relay precoders for per-stream gains ``lambda_r``.

    With thin SVDs ``H2 = U2 S2 V2^H`` and the top-K_r part of
    ``H1 = U1 S1 V1^H``, and ``R`` the unitary polar factor of the top K_r rows
    of ``U1`` (``R = U1`` when N = K_r)::

        Lambda_b     = S1^-1 R^H U2          W_br = V1 Lambda_b U2^H
        Lambda_r_hat = S2^-1 U2^H R          W_r  = V2 S2^-1 U2^H diag(lambda_r) R U1^H

    so that ``H2 W_r H1 W_br = diag(lambda_r)`` and ``H2 W_r = diag(lambda_r) R U1^H``,
    which is ``diag(lambda_r)`` itself when N = K_r. For N = K_r these are
    exactly ``W_br = V1 Lambda_b U2^H`` and ``W_r = V2 Lambda_r_hat U1^H Lambda_r``.
    """
    h1 = as_complex_matrix(h1, "h1")
    h2 = np.asarray(h2, dtype=np.complex128)
    if h2.ndim != 2:
        raise DimensionError("h2 must be a K_r x N matrix")
    k, n = h2.shape
    m = h1.shape[1]
    if h1.shape[0] != n:
        raise DimensionError(f"h1 has {h1.shape[0]} rows but h2 has {n} columns")
    lam = np.asarray(lambda_r, dtype=float).reshape(-1)
    if lam.size != k:
        raise DimensionError(f"lambda_r has length {lam.size}, expected {k}")
    if np.any(lam < 0) or not np.all(np.isfinite(lam)):
        raise ValueError("lambda_r must be finite and non-negative")
    if k == 0:
        empty = np.zeros((0, 0), dtype=np.complex128)
        return ZfConstruction(np.zeros((m, 0), dtype=np.complex128), np.zeros((n, n), dtype=np.complex128),
                              empty, empty, lam, empty, np.zeros(0))
    if not np.all(np.isfinite(h2)):
        raise NumericalError("h2 has non-finite entries")

    s2 = svd(h2)
    if n < k or s2.sigma[-1] <= RANK_TOL * s2.sigma[0]:
        raise InfeasibleError("H2", f"need rank {k}, singular values {s2.sigma}")
    s1 = svd(h1)
    if min(n, m) < k or s1.sigma[k - 1] <= RANK_TOL * s1.sigma[0]:
        raise InfeasibleError("H1", f"need rank {k}, singular values {s1.sigma}")

    u2, sig2, v2 = s2.u, s2.sigma, s2.v
    u1, sig1, v1 = s1.u[:, :k], s1.sigma[:k], s1.v[:, :k]
    r = u1 if n == k else _polar_unitary(u1[:k, :])

    lambda_b = (r.conj().T @ u2) / sig1[:, None]
    lambda_r_hat = (u2.conj().T @ r) / sig2[:, None]
    w_br = v1 @ lambda_b @ u2.conj().T
    left = v2 @ (u2.conj().T / sig2[:, None])          # H2 pseudo-inverse
    w_r = left @ (lam[:, None] * (r @ u1.conj().T))
    return ZfConstruction(w_br=w_br, w_r=w_r, lambda_b=lambda_b, lambda_r_hat=lambda_r_hat,
                          lambda_r=lam, u2=u2, sigma2=sig2)


def relay_power_usage(w_r, h1, w_br) -> float:
    """Relay transmit power ``Tr(W_r (H1 W_br W_br^H H1^H + I) W_r^H)``."""
    w_r = np.asarray(w_r, dtype=np.complex128)
    g = np.asarray(h1, dtype=np.complex128) @ np.asarray(w_br, dtype=np.complex128)
    cov = g @ g.conj().T + np.eye(w_r.shape[1])
    return float(np.real(np.trace(w_r @ cov @ w_r.conj().T)))


def relay_power_closed_form(u2, sigma2, lambda_r) -> float:
    """``2 sum_m sum_n |U2(m,n)|^2 sigma_n^-2 lambda_m^2``."""
    return 2.0 * float(np.sum(f_constants(u2, sigma2) * np.asarray(lambda_r, dtype=float) ** 2))


# ---------------------------------------------------------------------------
# Relay power allocation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerAllocation:
    lambda_r_opt: np.ndarray
    alpha1: float
    f_constants: np.ndarray
    total_power: float
    degenerate: bool = False

    @property
    def objective(self) -> float:
        return relay_objective(self.lambda_r_opt)


def f_constants(u2, sigma2) -> np.ndarray:
    """``F_l = sum_n |U2(l,n)|^2 / sigma_n^2`` for every stream l."""
    u2 = np.asarray(u2)
    s = np.asarray(sigma2, dtype=float)
    return (np.abs(u2) ** 2) @ (1.0 / s**2)


def relay_objective(lambda_r) -> float:
    t = np.asarray(lambda_r, dtype=float) ** 2
    return float(np.sum(np.log2(1.0 + t / (t + 1.0))))


def stationary_gain_sq(alpha1: float, f, formula: str = "kkt") -> np.ndarray:
    """Unclamped ``lambda^2`` solving the stationarity condition at ``alpha1``.

    ``formula="kkt"`` solves ``(2t+1)(t+1) = 1 / (2 alpha1 F ln 2)`` exactly;
    ``formula="printed"`` uses ``(sqrt(1 + 2/(alpha1 F ln 2)) - 3) / 4``, the
    published closed form, whose constant differs by a factor of two.
    """
    f = np.asarray(f, dtype=float)
    x = alpha1 * f * LN2
    with np.errstate(divide="ignore"):
        if formula == "kkt":
            inner = 1.0 + 4.0 / x
        elif formula == "printed":
            inner = 1.0 + 2.0 / x
        else:
            raise ValueError(f"unknown formula {formula!r}")
    return (np.sqrt(inner) - 3.0) / 4.0


def kkt_residual(lambda_r, alpha1: float, f) -> np.ndarray:
    """Stationarity residual in lambda with the box multipliers set to zero."""
    lam = np.asarray(lambda_r, dtype=float)
    f = np.asarray(f, dtype=float)
    t = lam**2
    return 2.0 * lam / ((2.0 * t + 1.0) * (t + 1.0) * LN2) - 4.0 * alpha1 * lam * f


def taylor_relay_power(f1: float, f_l: float) -> float:
    """First-order approximation ``1/(4 f1 F_l ln 2) - 0.5`` of ``lambda^2``.

    It expands the inner square root of the printed closed form around
    ``2/(f1 F_l ln 2) = 0`` and may be negative; callers clamp.
    """
    return 1.0 / (4.0 * f1 * f_l * LN2) - 0.5


def optimal_relay_power(u2, sigma2, p_r_max: float, lambda_r_max: float,
                        formula: str = "kkt", max_iters: int = 200,
                        rtol: float = 1e-10) -> PowerAllocation:
    """Maximize ``sum log2(1 + l^2/(l^2+1))`` s.t. ``2 sum F l^2 <= P``, ``0 <= l <= lmax``.

    Each stream takes the stationary gain for the current multiplier clamped
    to ``[0, lambda_r_max]``; the multiplier is found by bisection (in log
    space) so that the budget is met with equality, unless every stream
    saturates at ``lambda_r_max`` within budget.
    """
    if p_r_max <= 0 or lambda_r_max <= 0:
        raise ValueError("p_r_max and lambda_r_max must be positive")
    sig = np.asarray(sigma2, dtype=float)
    if np.any(sig <= 0):
        raise ValueError("singular values must be positive")
    f = f_constants(u2, sig)
    if f.size == 0:
        return PowerAllocation(np.zeros(0), 0.0, f, 0.0)
    t_max = lambda_r_max**2

    def gains(alpha1: float) -> np.ndarray:
        return np.clip(stationary_gain_sq(alpha1, f, formula), 0.0, t_max)

    def power(t: np.ndarray) -> float:
        return 2.0 * float(np.sum(f * t))

    full = np.full(f.size, t_max)
    if power(full) <= p_r_max:
        return PowerAllocation(np.sqrt(full), 0.0, f, power(full))

    # bracket alpha1 * max(F) * ln2 in [1e-12, 1e12] so the search is scale free
    scale = 1.0 / (float(np.max(f)) * LN2)
    lo, hi = math.log(1e-12 * scale), math.log(1e12 * scale)
    t = gains(math.exp(hi))
    alpha1 = math.exp(hi)
    for _ in range(max_iters):
        mid = 0.5 * (lo + hi)
        alpha1 = math.exp(mid)
        t = gains(alpha1)
        used = power(t)
        # stop only on the feasible side so the budget is never exceeded
        if 0.0 <= p_r_max - used <= rtol * p_r_max:
            break
        if used > p_r_max:
            lo = mid
        else:
            hi = mid
    else:
        # budget can only be undershot from the feasible side
        alpha1 = math.exp(hi)
        t = gains(alpha1)

    lam = np.sqrt(t)
    if np.all(lam < 1e-12):
        return PowerAllocation(np.zeros_like(lam), alpha1, f, 0.0, degenerate=True)
    return PowerAllocation(lam, alpha1, f, power(t))
