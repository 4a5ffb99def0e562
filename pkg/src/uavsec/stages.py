"""Serving one slot: GBS precoding for the direct cluster, ZF relaying for the other."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beamforming import (PowerAllocation, ZfConstruction, mrt_precoder, optimal_relay_power,
                          wmmse_precoder, zf_construct)
from .capacity import LinkRates, direct_link_rates, relay_link_rates
from .channel import ChannelSet


@dataclass(frozen=True)
class RelayOutcome:
    zf: ZfConstruction
    allocation: PowerAllocation
    rates: LinkRates
    gbs_power: float   # ||W_br||_F^2 spent by the GBS on the relay hop


def serve_relay(channels: ChannelSet, p_r: float, lambda_r_max: float, formula: str = "kkt",
                rate_factor: float = 1.0) -> RelayOutcome:
    """ZF relay beamforming with the optimal power allocation for budget ``p_r``."""
    k = channels.h2.shape[0]
    if k == 0 or p_r <= 0:
        alloc = PowerAllocation(np.zeros(k), 0.0, np.zeros(k), 0.0, degenerate=k > 0)
        zf = zf_construct(channels.h1, channels.h2, np.zeros(k))
    else:
        probe = zf_construct(channels.h1, channels.h2, np.zeros(k))
        alloc = optimal_relay_power(probe.u2, probe.sigma2, p_r, lambda_r_max, formula=formula)
        zf = zf_construct(channels.h1, channels.h2, alloc.lambda_r_opt)
    rates = relay_link_rates(channels.h2, channels.h2e, zf.w_r, channels.h1, zf.w_br, rate_factor)
    return RelayOutcome(zf, alloc, rates, float(np.linalg.norm(zf.w_br) ** 2))


def serve_direct(channels: ChannelSet, p_b: float, beamforming: bool = True,
                 max_iters: int = 100, tol: float = 1e-6) -> LinkRates:
    """Direct-link rates with WMMSE (``beamforming=True``) or equal-power MRT beams."""
    h0 = channels.h0
    if h0.shape[0] == 0:
        return LinkRates.empty()
    if beamforming:
        w = wmmse_precoder(h0, p_b, max_iters=max_iters, tol=tol)
    else:
        w = mrt_precoder(h0, p_b)
    return direct_link_rates(h0, channels.h0e, w)
