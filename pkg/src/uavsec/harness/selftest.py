"""Fast invariant checks runnable from the CLI without pytest."""

from __future__ import annotations

import numpy as np

from ..beamforming import (kkt_residual, optimal_relay_power, relay_power_closed_form,
                           relay_power_usage, wmmse_trace, zf_construct)
from ..capacity import relay_link_rates
from ..numerics import complex_gaussian, make_rng, svd
from ..rl.dqn import dqn_loss_and_grad
from ..rl.network import QNetwork


def _zf_checks(rng, n_instances=100):
    worst_e2e = worst_gram = worst_sinr = worst_power = 0.0
    for _ in range(n_instances):
        k = int(rng.integers(1, 5))
        n = int(rng.integers(k, 9))
        m = int(rng.integers(k, 9))
        h1 = complex_gaussian(n, m, 1.0, rng)
        h2 = complex_gaussian(k, n, 1.0, rng)
        lam = rng.uniform(0.0, 3.0, k)
        zf = zf_construct(h1, h2, lam)
        worst_e2e = max(worst_e2e, np.linalg.norm(zf.end_to_end(h1, h2) - np.diag(lam)))
        shaped = h2 @ zf.w_r
        worst_gram = max(worst_gram, np.linalg.norm(shaped @ shaped.conj().T - np.diag(lam**2)))
        rates = relay_link_rates(h2, np.zeros((0, n)), zf.w_r, h1, zf.w_br)
        worst_sinr = max(worst_sinr, np.max(np.abs(rates.sinr_per_user - lam**2 / (lam**2 + 1))))
        used = relay_power_usage(zf.w_r, h1, zf.w_br)
        closed = relay_power_closed_form(zf.u2, zf.sigma2, lam)
        worst_power = max(worst_power, abs(used - closed) / max(closed, 1e-300))
    return [
        ("zf end-to-end identity", worst_e2e < 1e-9, f"max err {worst_e2e:.2e}"),
        ("zf noise shaping", worst_gram < 1e-9, f"max err {worst_gram:.2e}"),
        ("relay sinr closed form", worst_sinr < 1e-9, f"max err {worst_sinr:.2e}"),
        ("relay power closed form", worst_power < 1e-9, f"max rel err {worst_power:.2e}"),
    ]


def _allocator_checks(rng, n_instances=100):
    worst_kkt = worst_tight = 0.0
    for _ in range(n_instances):
        k = int(rng.integers(1, 6))
        u2 = svd(complex_gaussian(k, k, 1.0, rng)).u
        sigma = np.sort(rng.uniform(0.2, 3.0, k))[::-1]
        p = float(rng.uniform(0.1, 50.0))
        lam_max = float(rng.uniform(0.5, 5.0))
        alloc = optimal_relay_power(u2, sigma, p, lam_max)
        lam = alloc.lambda_r_opt
        interior = (lam > 1e-9) & (lam < lam_max - 1e-9)
        if alloc.alpha1 > 0 and np.any(interior):
            worst_kkt = max(worst_kkt, np.max(np.abs(kkt_residual(lam, alloc.alpha1, alloc.f_constants)[interior])))
            worst_tight = max(worst_tight, abs(alloc.total_power - p) / p)
    return [
        ("allocator stationarity", worst_kkt < 1e-8, f"max residual {worst_kkt:.2e}"),
        ("allocator budget tight", worst_tight < 1e-6, f"max rel gap {worst_tight:.2e}"),
    ]


def _wmmse_check(rng, n_instances=20):
    worst = 0.0
    for _ in range(n_instances):
        k = int(rng.integers(2, 5))
        h = complex_gaussian(k, int(rng.integers(k, 9)), 1.0, rng)
        _, rates = wmmse_trace(h, float(rng.uniform(1.0, 100.0)))
        worst = min(worst, float(np.min(np.diff(rates))) if len(rates) > 1 else 0.0)
    return [("wmmse monotone sum rate", worst >= -1e-9, f"worst step {worst:.2e}")]


def _gradient_check(rng):
    net = QNetwork([3, 8, 8, 5], rng)
    # zero biases put dead-input units exactly on the ReLU kink
    for b in net.params[1::2]:
        b[:] = rng.normal(0.0, 0.1, b.shape)
    target = net.copy()
    batch = (rng.standard_normal((6, 3)), rng.integers(0, 5, 6), rng.standard_normal(6),
             rng.standard_normal((6, 3)), rng.random(6) < 0.3)
    _, grads, _ = dqn_loss_and_grad(batch, net, target, 0.9)
    worst = 0.0
    h = 1e-5
    for p, g in zip(net.params, grads):
        flat = p.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            up = dqn_loss_and_grad(batch, net, target, 0.9)[0]
            flat[i] = old - h
            down = dqn_loss_and_grad(batch, net, target, 0.9)[0]
            flat[i] = old
            num = (up - down) / (2 * h)
            worst = max(worst, abs(num - g.reshape(-1)[i]) / max(1e-6, abs(num) + abs(g.reshape(-1)[i])))
    return [("dqn gradient vs finite differences", worst < 1e-4, f"max rel err {worst:.2e}")]


def run_selftest(seed: int = 0):
    rng = make_rng(seed, 0x5E1F)
    return _zf_checks(rng) + _allocator_checks(rng) + _wmmse_check(rng) + _gradient_check(rng)
