"""Knowledge-base alignment protocol between a traffic pair's endpoints.

Before allocation, a pair may equalize knowledge-base versions: versions are
exchanged, the update is accepted when the projected throughput gain covers
the transfer cost, and the lower-version side downloads the newer release.
Transfer costs are charged to the drop as a throughput-equivalent penalty
rather than as occupied bandwidth.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .errors import StateError
from .model import KnowledgeProfile

DEFAULT_PAYLOAD_BITS_PER_VERSION = 1e6
DEFAULT_COST_WEIGHT = 1e-6  # msg/s of penalty per transferred bit


class SyncState(Enum):
    IDLE = "idle"
    VERSIONS_EXCHANGED = "versions_exchanged"
    TRANSFERRING = "transferring"
    ALIGNED = "aligned"
    DECLINED = "declined"


@dataclass
class SyncSession:
    """One alignment attempt between two knowledge profiles."""

    profile_a: KnowledgeProfile
    profile_b: KnowledgeProfile
    payload_bits_per_version: float = DEFAULT_PAYLOAD_BITS_PER_VERSION
    state: SyncState = SyncState.IDLE
    version_gap: int | None = None
    transferred: float = 0.0


def exchange_versions(session: SyncSession) -> SyncSession:
    """Record the version gap; legal only from the idle state."""
    if session.state is not SyncState.IDLE:
        raise StateError(f"exchange_versions requires IDLE, session is {session.state.name}")
    session.version_gap = abs(session.profile_a.version - session.profile_b.version)
    session.state = SyncState.VERSIONS_EXCHANGED
    return session


def transfer_cost_bits(session: SyncSession) -> float:
    """Bits the pending download would move."""
    if session.version_gap is None:
        raise StateError("versions have not been exchanged")
    return session.payload_bits_per_version * session.version_gap


def decide_update(session: SyncSession, est_gain: float, est_cost_bits: float,
                  cost_weight: float) -> bool:
    """Accept the update iff the projected throughput gain covers the cost.

    ``est_gain`` is the caller's estimate (msg/s) of the throughput gained by
    the pair match rising once versions are equalized; the cost side converts
    the transfer bits into the same unit.
    """
    if session.state is not SyncState.VERSIONS_EXCHANGED:
        raise StateError(f"decide_update requires VERSIONS_EXCHANGED, session is {session.state.name}")
    accept = est_gain >= cost_weight * est_cost_bits
    session.state = SyncState.TRANSFERRING if accept else SyncState.DECLINED
    return accept


def complete_transfer(session: SyncSession):
    """Equalize both versions to the newer one; returns the updated profiles."""
    if session.state is not SyncState.TRANSFERRING:
        raise StateError(f"complete_transfer requires TRANSFERRING, session is {session.state.name}")
    latest = max(session.profile_a.version, session.profile_b.version)
    session.profile_a = replace(session.profile_a, version=latest)
    session.profile_b = replace(session.profile_b, version=latest)
    session.transferred = session.payload_bits_per_version * session.version_gap
    session.state = SyncState.ALIGNED
    return session, (session.profile_a, session.profile_b)
