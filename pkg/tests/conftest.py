"""Shared builders for hand-crafted snapshots."""

import numpy as np
import pytest
from dataclasses import replace

from sran.config import SimConfig, validate_config
from sran.model import (BaseStationNode, KnowledgeProfile, NetworkSnapshot,
                        PairKind, TerminalDevice, TrafficPair,
                        pair_matching_degree, SERVER_KNOWLEDGE)


def make_config(**overrides) -> SimConfig:
    return validate_config(replace(SimConfig(), **overrides))


def station(cfg, i, pos, bw_budget=None, tx_power=None):
    return BaseStationNode(id=i, position=pos,
                           bw_budget=bw_budget if bw_budget is not None else cfg.bw_per_bs,
                           tx_power=tx_power if tx_power is not None else cfg.tx_power_bs)


def terminal(cfg, i, pos, base=0.7, version=3, ability=0.8):
    return TerminalDevice(id=i, position=pos,
                          knowledge=KnowledgeProfile(version=version, base_match=base),
                          coding_ability=ability, tx_power=cfg.tx_power_td)


def server_pair(pid, src_td, terminals, kind=PairKind.TD_TO_SERVER, tau=None):
    if tau is None:
        tau = pair_matching_degree(terminals[src_td].knowledge, SERVER_KNOWLEDGE)
    return TrafficPair(id=pid, kind=kind, src_td=src_td, dst_td=None, tau=tau)


def td_pair(pid, src_td, dst_td, terminals, tau=None):
    if tau is None:
        tau = pair_matching_degree(terminals[src_td].knowledge,
                                   terminals[dst_td].knowledge)
    return TrafficPair(id=pid, kind=PairKind.TD_TO_TD, src_td=src_td,
                       dst_td=dst_td, tau=tau)


def build_snapshot(cfg, stations, terminals, pairs, fading=None):
    """Manual snapshot; cfg counts need not match the explicit node lists."""
    if fading is None:
        fading = np.ones((len(terminals), len(stations)))
    return NetworkSnapshot(config=cfg, base_stations=tuple(stations),
                           terminals=tuple(terminals), pairs=tuple(pairs),
                           fading=np.asarray(fading, dtype=float))


@pytest.fixture
def default_cfg():
    return make_config()
