"""Physical-layer math: path loss, SINR, Shannon rate, two-hop composition.

Stateless pure functions; every formula accepts scalars or numpy arrays.
Noise scales with the allocated bandwidth, which keeps the per-station
bandwidth split a strictly concave problem.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import DomainError
from .model import Direction, Endpoint, NetworkSnapshot, endpoint_terminal, radio_endpoints

if TYPE_CHECKING:
    from .allocator import AllocationDecision

# Distances below this are clamped to avoid unbounded gain at degenerate drops.
NEAR_FIELD_CLAMP_M = 10.0


@dataclass(frozen=True)
class LinkState:
    """Channel state of one wireless hop at its allocated bandwidth."""

    gain: float       # path loss x fading, unitless power ratio
    sinr: float       # linear ratio
    sinr_db: float
    bandwidth: float  # Hz


def path_loss_db(distance):
    """Macro-cell log-distance path loss in dB; clamps below 10 m."""
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise DomainError(f"distance must be > 0, got {distance}")
    d = np.maximum(d, NEAR_FIELD_CLAMP_M)
    return 128.1 + 37.6 * np.log10(d / 1000.0)


def link_gain(distance, fading):
    """Linear power gain of a link: path loss times fading multiplier."""
    return 10.0 ** (-path_loss_db(distance) / 10.0) * fading


def gain_matrix(snapshot: NetworkSnapshot) -> np.ndarray:
    """(n_td, n_bs) linear gains between every terminal and station."""
    td_pos = np.array([t.position for t in snapshot.terminals], dtype=float)
    bs_pos = np.array([b.position for b in snapshot.base_stations], dtype=float)
    diff = td_pos[:, None, :] - bs_pos[None, :, :]
    dist = np.maximum(np.hypot(diff[..., 0], diff[..., 1]), 1e-9)
    return link_gain(dist, snapshot.fading)


def sinr(p_tx, gain, bandwidth, noise_psd, interference=0.0):
    """Signal-to-interference-plus-noise ratio with bandwidth-scaled noise."""
    if np.any(np.asarray(bandwidth) <= 0):
        raise DomainError(f"bandwidth must be > 0, got {bandwidth}")
    return (p_tx * gain) / (noise_psd * bandwidth + interference)


def sinr_to_db(value) -> float:
    return 10.0 * np.log10(value) if value > 0 else float("-inf")


def make_link(p_tx, gain, bandwidth, noise_psd, interference=0.0) -> LinkState:
    """Build a LinkState; a zero-bandwidth hop is a dead link (sinr 0)."""
    if bandwidth <= 0:
        return LinkState(gain=float(gain), sinr=0.0, sinr_db=float("-inf"), bandwidth=0.0)
    g = float(sinr(p_tx, gain, bandwidth, noise_psd, interference))
    return LinkState(gain=float(gain), sinr=g, sinr_db=sinr_to_db(g), bandwidth=float(bandwidth))


def bit_rate(bandwidth, sinr_ratio):
    """Shannon rate in bits/s; zero bandwidth transmits nothing."""
    return bandwidth * np.log2(1.0 + sinr_ratio)


def link_rate(link: LinkState) -> float:
    return float(bit_rate(link.bandwidth, link.sinr))


def e2e_compose(uplink: LinkState, downlink: LinkState) -> LinkState:
    """Bottleneck composition of a two-hop path (the core network is ideal)."""
    s = min(uplink.sinr, downlink.sinr)
    return LinkState(
        gain=min(uplink.gain, downlink.gain),
        sinr=s,
        sinr_db=sinr_to_db(s),
        bandwidth=min(uplink.bandwidth, downlink.bandwidth),
    )


def e2e_bit_rate(uplink: LinkState, downlink: LinkState) -> float:
    """End-to-end bit rate of a two-hop path: the slower hop limits it."""
    return min(link_rate(uplink), link_rate(downlink))


def interference_at(victim: Endpoint, snapshot: NetworkSnapshot,
                    decision: "AllocationDecision", gains: np.ndarray | None = None) -> float:
    """Co-channel interference power (mW) at the victim hop's receiver.

    Downlink victims hear every other transmitting station; uplink victims
    hear every other transmitting uplink terminal.  Transmitters are modelled
    as flat power spectral densities overlapping the victim's whole band
    (full frequency reuse).
    """
    cfg = snapshot.config
    if not cfg.interference_enabled:
        return 0.0
    if gains is None:
        gains = gain_matrix(snapshot)

    pair_id, direction = victim
    pair = snapshot.pairs[pair_id]
    serving = decision.assoc[victim]
    bw_victim = decision.bw[(serving, victim)]
    if bw_victim <= 0:
        return 0.0

    total = 0.0
    if direction is Direction.DOWNLINK:
        rx_td = endpoint_terminal(pair, direction)
        transmitting = set()
        for other in snapshot.pairs:
            for ep in radio_endpoints(other):
                if ep[1] is Direction.DOWNLINK:
                    b = decision.assoc[ep]
                    if decision.bw[(b, ep)] > 0:
                        transmitting.add(b)
        for b in sorted(transmitting):
            if b == serving:
                continue
            station = snapshot.base_stations[b]
            psd = station.tx_power / station.bw_budget
            total += psd * gains[rx_td, b] * bw_victim
    else:
        for other in snapshot.pairs:
            for ep in radio_endpoints(other):
                if ep == victim or ep[1] is not Direction.UPLINK:
                    continue
                b = decision.assoc[ep]
                bw_other = decision.bw[(b, ep)]
                if bw_other <= 0:
                    continue
                tx_td = endpoint_terminal(other, Direction.UPLINK)
                psd = snapshot.terminals[tx_td].tx_power / bw_other
                total += psd * gains[tx_td, serving] * bw_victim
    return total
