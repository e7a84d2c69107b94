"""Semantic layer: recovery accuracy, compressed message length, message rates,
mode selection, and system-level metric assembly.

Accuracy is an expected-success scalar in [0, 1]; message rates are expected
values (no per-message sampling), so drop-level randomness comes only from the
network draws.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .channel import (LinkState, bit_rate, e2e_bit_rate, e2e_compose, gain_matrix,
                      interference_at, link_rate, make_link)
from .config import SimConfig
from .errors import ConservationError, DomainError
from .model import (Direction, Mode, NetworkSnapshot, PairKind, endpoint_terminal,
                    pair_coding_ability, pair_terminal_ids, radio_endpoints)

if TYPE_CHECKING:
    from .allocator import AllocationDecision


def _logistic(x):
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    ex = np.exp(arr[~pos])
    out[~pos] = ex / (1.0 + ex)
    if np.ndim(x) == 0:
        return float(out[0])
    return out.reshape(np.shape(x))


def semantic_accuracy(cfg: SimConfig, tau, c, sinr_db, mode: Mode):
    """Expected recovery accuracy of one message.

    Semantic decoding needs shared knowledge and coder capability on top of
    the channel, but tolerates a lower SINR (earlier logistic midpoint).
    Bit-mode delivery depends on the channel alone.
    """
    if mode is Mode.SEMANTIC:
        return tau * c * _logistic(cfg.acc_slope * (sinr_db - cfg.acc_midpoint_sem))
    return _logistic(cfg.acc_slope * (sinr_db - cfg.acc_midpoint_bit))


def message_length(cfg: SimConfig, mode: Mode, tau, c):
    """Bits on the air per message; shared knowledge enables compression."""
    if mode is Mode.SEMANTIC:
        return cfg.msg_len_source * (1.0 - cfg.compress_max * tau * c)
    return cfg.msg_len_source


def message_rate(bits_per_s, msg_len, accuracy):
    """Correctly recovered messages per second (expected value)."""
    if np.any(np.asarray(msg_len) <= 0):
        raise DomainError(f"msg_len must be > 0, got {msg_len}")
    return (bits_per_s / msg_len) * accuracy


def mode_profile(cfg: SimConfig, tau, c, sinr_db):
    """Vectorized mode decision: returns (accuracy, msg_len, semantic_mask).

    At equal bandwidth the message rate comparison reduces to accuracy per
    transmitted bit, so the decision needs only the probe SINR.  Pairs below
    the knowledge-match floor are forced to bit mode; exact ties go semantic.
    """
    tau = np.asarray(tau, dtype=float)
    c = np.asarray(c, dtype=float)
    sinr_db = np.asarray(sinr_db, dtype=float)
    eps_sem = semantic_accuracy(cfg, tau, c, sinr_db, Mode.SEMANTIC)
    len_sem = message_length(cfg, Mode.SEMANTIC, tau, c)
    eps_bit = np.broadcast_to(
        np.asarray(semantic_accuracy(cfg, tau, c, sinr_db, Mode.BIT)),
        np.broadcast_shapes(tau.shape, c.shape, sinr_db.shape))
    len_bit = cfg.msg_len_source
    semantic = (tau >= cfg.tau_min_semcom) & (eps_sem / len_sem >= eps_bit / len_bit)
    accuracy = np.where(semantic, eps_sem, eps_bit)
    msg_len = np.where(semantic, len_sem, len_bit)
    return accuracy, msg_len, semantic


def select_mode(cfg: SimConfig, tau: float, c: float, sinr_db: float) -> Mode:
    """Per-pair transmission scheme decision at a probe SINR."""
    _, _, semantic = mode_profile(cfg, tau, c, sinr_db)
    return Mode.SEMANTIC if bool(semantic) else Mode.BIT


@dataclass(frozen=True)
class PairEvaluation:
    pair_id: int
    mode: Mode
    link: LinkState      # effective link (two-hop pairs: bottleneck composite)
    msg_len: float       # bits
    accuracy: float
    msg_rate: float      # msg/s
    power_used: float    # mW attributed to this pair (stations may be shared)


@dataclass(frozen=True)
class MetricReport:
    stm: float   # system throughput in messages, msg/s
    sse: float   # semantic spectrum efficiency, msg/s/Hz
    see: float   # semantic energy efficiency, msg/s/mW
    pair_evaluations: tuple[PairEvaluation, ...]


def _check_conservation(snapshot: NetworkSnapshot, decision: "AllocationDecision") -> None:
    used = {}
    for (b, _ep), bw in decision.bw.items():
        used[b] = used.get(b, 0.0) + bw
    for b, total in used.items():
        budget = snapshot.base_stations[b].bw_budget
        if total > budget * (1.0 + 1e-9):
            raise ConservationError(
                f"station {b} allocates {total} Hz of a {budget} Hz budget")


def system_metrics(snapshot: NetworkSnapshot, decision: "AllocationDecision") -> MetricReport:
    """Evaluate a complete allocation into pair-level and system-level metrics.

    Pairs are summed in id order for bit-exact reproducibility.  SSE divides
    by the whole system bandwidth so strategies with equal budgets stay
    comparable; SEE counts each active transmitter once plus the computing
    power of every semantic-mode terminal endpoint.
    """
    cfg = snapshot.config
    _check_conservation(snapshot, decision)
    gains = gain_matrix(snapshot)

    evaluations: list[PairEvaluation] = []
    active_tds: set[int] = set()
    active_bss: set[int] = set()
    comp_power = 0.0
    stm = 0.0

    for pair in snapshot.pairs:
        links: dict[Direction, LinkState] = {}
        for ep in radio_endpoints(pair):
            _, direction = ep
            b = decision.assoc[ep]
            bw = decision.bw[(b, ep)]
            td = endpoint_terminal(pair, direction)
            if direction is Direction.UPLINK:
                p_tx = snapshot.terminals[td].tx_power
            else:
                p_tx = snapshot.base_stations[b].tx_power
            interf = interference_at(ep, snapshot, decision, gains) if bw > 0 else 0.0
            links[direction] = make_link(p_tx, gains[td, b], bw, cfg.noise_psd, interf)
            if bw > 0:
                if direction is Direction.UPLINK:
                    active_tds.add(td)
                else:
                    active_bss.add(b)

        if pair.kind is PairKind.TD_TO_TD:
            effective = e2e_compose(links[Direction.UPLINK], links[Direction.DOWNLINK])
            rate_bits = e2e_bit_rate(links[Direction.UPLINK], links[Direction.DOWNLINK])
        else:
            effective = next(iter(links.values()))
            rate_bits = link_rate(effective)

        c = pair_coding_ability(snapshot, pair)
        mode = pair.mode or select_mode(cfg, pair.tau, c, effective.sinr_db)
        accuracy = float(semantic_accuracy(cfg, pair.tau, c, effective.sinr_db, mode))
        msg_len = float(message_length(cfg, mode, pair.tau, c))
        rate = float(message_rate(rate_bits, msg_len, accuracy))

        power = 0.0
        for direction, link in links.items():
            if link.bandwidth > 0:
                if direction is Direction.UPLINK:
                    power += snapshot.terminals[endpoint_terminal(pair, direction)].tx_power
                else:
                    power += snapshot.base_stations[decision.assoc[(pair.id, direction)]].tx_power
        if mode is Mode.SEMANTIC:
            pair_comp = sum(cfg.p_comp_coeff * snapshot.terminals[t].coding_ability
                            for t in pair_terminal_ids(pair))
            power += pair_comp
            comp_power += pair_comp

        evaluations.append(PairEvaluation(
            pair_id=pair.id, mode=mode, link=effective, msg_len=msg_len,
            accuracy=accuracy, msg_rate=rate, power_used=power))
        stm += rate

    total_bw = sum(b.bw_budget for b in snapshot.base_stations)
    sse = stm / total_bw if total_bw > 0 else 0.0
    tx_power = (sum(snapshot.terminals[t].tx_power for t in sorted(active_tds))
                + sum(snapshot.base_stations[b].tx_power for b in sorted(active_bss)))
    denom = tx_power + comp_power
    see = stm / denom if denom > 0 else 0.0
    return MetricReport(stm=stm, sse=sse, see=see, pair_evaluations=tuple(evaluations))
