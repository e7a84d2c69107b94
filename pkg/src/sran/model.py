"""Domain model: nodes, knowledge profiles, traffic pairs, and drop snapshots.

All types are plain values; snapshots are never mutated after construction, so
they can be shared read-only across concurrent drop evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .config import SimConfig

# Shared-knowledge overlap decays geometrically with the version gap between
# two knowledge bases; equalizing versions removes the decay entirely.
VERSION_DECAY = 0.9

# Newest knowledge-base version in circulation.  Terminal profiles are drawn
# from {0, ..., KB_VERSION_LATEST}; the service layer always holds the latest.
KB_VERSION_LATEST = 5


@dataclass(frozen=True)
class KnowledgeProfile:
    """State of one knowledge base: distributed version and base overlap."""

    version: int
    base_match: float


# Reference profile of a task server: fully populated and always up to date.
SERVER_KNOWLEDGE = KnowledgeProfile(version=KB_VERSION_LATEST, base_match=1.0)


def pair_matching_degree(a: KnowledgeProfile, b: KnowledgeProfile) -> float:
    """Knowledge match of a transmission pair, in [0, 1].

    The overlap is bounded by the weaker side's base match and shrinks
    geometrically with the version gap.  Symmetric in its arguments.
    """
    gap = abs(a.version - b.version)
    return min(a.base_match, b.base_match) * VERSION_DECAY**gap


@dataclass(frozen=True)
class BaseStationNode:
    id: int
    position: tuple[float, float]
    bw_budget: float     # Hz
    tx_power: float      # mW


@dataclass(frozen=True)
class TerminalDevice:
    id: int
    position: tuple[float, float]
    knowledge: KnowledgeProfile
    coding_ability: float   # in (0, 1]
    tx_power: float         # mW


class PairKind(Enum):
    """Traffic session shapes.

    TD_TO_TD sessions relay through two wireless hops (uplink at the source's
    serving station, downlink at the destination's); server sessions use a
    single hop in the named direction.
    """

    TD_TO_TD = "td_to_td"
    TD_TO_SERVER = "td_to_server"
    SERVER_TO_TD = "server_to_td"


class Mode(Enum):
    SEMANTIC = "semantic"
    BIT = "bit"


class Direction(Enum):
    UPLINK = "ul"
    DOWNLINK = "dl"


# A radio endpoint is one wireless hop of a traffic pair.
Endpoint = tuple[int, Direction]


@dataclass(frozen=True)
class TrafficPair:
    id: int
    kind: PairKind
    src_td: int
    dst_td: int | None       # TD_TO_TD only
    tau: float               # pair knowledge match, in [0, 1]
    mode: Mode | None = None  # filled in by mode selection


def radio_endpoints(pair: TrafficPair) -> tuple[Endpoint, ...]:
    if pair.kind is PairKind.TD_TO_TD:
        return ((pair.id, Direction.UPLINK), (pair.id, Direction.DOWNLINK))
    if pair.kind is PairKind.TD_TO_SERVER:
        return ((pair.id, Direction.UPLINK),)
    return ((pair.id, Direction.DOWNLINK),)


def endpoint_terminal(pair: TrafficPair, direction: Direction) -> int:
    """Terminal carrying the given hop of the pair."""
    if pair.kind is PairKind.TD_TO_TD and direction is Direction.DOWNLINK:
        return pair.dst_td
    return pair.src_td


def pair_terminal_ids(pair: TrafficPair) -> tuple[int, ...]:
    if pair.kind is PairKind.TD_TO_TD:
        return (pair.src_td, pair.dst_td)
    return (pair.src_td,)


@dataclass(frozen=True, eq=False)
class NetworkSnapshot:
    """One random network realization: nodes, traffic pairs, and fading.

    ``fading`` holds one unitless power-gain multiplier per (terminal, station)
    link, shared by both hop directions.
    """

    config: SimConfig
    base_stations: tuple[BaseStationNode, ...]
    terminals: tuple[TerminalDevice, ...]
    pairs: tuple[TrafficPair, ...]
    fading: np.ndarray

    def __post_init__(self):
        self.fading.setflags(write=False)


def pair_coding_ability(snapshot: NetworkSnapshot, pair: TrafficPair) -> float:
    """Effective coding ability of the pair: its weakest terminal-side coder.

    Server-side coders are treated as ideal, so single-hop pairs inherit the
    terminal's ability directly.
    """
    return min(snapshot.terminals[t].coding_ability for t in pair_terminal_ids(pair))


def all_endpoints(snapshot: NetworkSnapshot) -> list[Endpoint]:
    """Every radio endpoint, ordered by pair id with uplink before downlink."""
    eps: list[Endpoint] = []
    for pair in snapshot.pairs:
        eps.extend(radio_endpoints(pair))
    return eps
