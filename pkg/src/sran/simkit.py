"""Scenario generation, per-drop execution, Monte Carlo sweeps, and CSV output.

Every drop is fully determined by (seed, drop_index) through a counter-based
stream rule on a named PRNG, so identical configs reproduce identical output
bytes at any worker count.  Strategies compared in a sweep always see the
same per-drop snapshots (common random numbers).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from ._version import __version__
from .allocator import (STRATEGY_IDS, STRATEGY_KB_AWARE, STRATEGY_MAXSINR_EVEN,
                        STRATEGY_MAXSINR_WF, STRATEGY_ORACLE, allocate_kb_aware,
                        allocate_maxsinr_even, allocate_maxsinr_waterfill,
                        full_band_probe, oracle_exhaustive)
from .channel import bit_rate
from .config import SimConfig, config_lines, validate_config
from .errors import ConfigError, RangeError
from .kbsync import (DEFAULT_COST_WEIGHT, DEFAULT_PAYLOAD_BITS_PER_VERSION,
                     SyncSession, complete_transfer, decide_update,
                     exchange_versions, transfer_cost_bits)
from .model import (KB_VERSION_LATEST, SERVER_KNOWLEDGE, BaseStationNode,
                    KnowledgeProfile, NetworkSnapshot, PairKind, TerminalDevice,
                    TrafficPair, pair_coding_ability, pair_matching_degree)
from .semantics import MetricReport, mode_profile, select_mode, system_metrics

PRNG_NAME = "PCG64"
STREAM_GOLDEN = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1

CSV_HEADER = "sweep_var,sweep_value,strategy,mean_stm,std_stm,mean_sse,mean_see,n_drops"

SWEEP_VARS = ("n_td", "n_bs", "tau_mean")


def stream_seed(seed: int, drop_index: int) -> int:
    """Counter-based per-drop stream seed: seed XOR (index * golden-ratio word)."""
    return (seed ^ ((drop_index * STREAM_GOLDEN) & _MASK64)) & _MASK64


def generate_drop(cfg: SimConfig, drop_index: int) -> NetworkSnapshot:
    """One seeded network realization.

    Stations sit on a jittered grid (stabilizes small-station sweeps),
    terminals are uniform, fading is unit-mean exponential per link, knowledge
    overlap is Beta-distributed around the configured mean, and terminals are
    partitioned into sessions so that no terminal belongs to two pairs.
    """
    rng = np.random.Generator(np.random.PCG64(stream_seed(cfg.seed, drop_index)))
    side = cfg.area_side

    grid_x = math.ceil(math.sqrt(cfg.n_bs))
    grid_y = math.ceil(cfg.n_bs / grid_x)
    jitter = rng.uniform(-0.25, 0.25, size=(cfg.n_bs, 2))
    stations = []
    for i in range(cfg.n_bs):
        row, col = divmod(i, grid_x)
        stations.append(BaseStationNode(
            id=i,
            position=((col + 0.5 + jitter[i, 0]) * side / grid_x,
                      (row + 0.5 + jitter[i, 1]) * side / grid_y),
            bw_budget=cfg.bw_per_bs,
            tx_power=cfg.tx_power_bs,
        ))

    td_pos = rng.uniform(0.0, side, size=(cfg.n_td, 2))
    fading = np.maximum(rng.exponential(1.0, size=(cfg.n_td, cfg.n_bs)), 1e-30)

    mean = cfg.tau_mean
    if mean >= 1.0:
        base = np.ones(cfg.n_td)
    elif mean <= 0.0:
        base = np.zeros(cfg.n_td)
    else:
        base = np.clip(rng.beta(2.0 * mean / (1.0 - mean), 2.0, size=cfg.n_td), 0.0, 1.0)
    versions = rng.integers(0, KB_VERSION_LATEST + 1, size=cfg.n_td)
    lo, hi = cfg.coding_ability_range
    ability = rng.uniform(lo, hi, size=cfg.n_td)

    terminals = tuple(
        TerminalDevice(
            id=i,
            position=(float(td_pos[i, 0]), float(td_pos[i, 1])),
            knowledge=KnowledgeProfile(version=int(versions[i]), base_match=float(base[i])),
            coding_ability=float(ability[i]),
            tx_power=cfg.tx_power_td,
        )
        for i in range(cfg.n_td))

    order = rng.permutation(cfg.n_td)
    pairs: list[TrafficPair] = []
    cursor = 0
    while cursor < cfg.n_td:
        if rng.random() < cfg.scenario3_fraction:
            src = int(order[cursor])
            cursor += 1
            kind = PairKind.TD_TO_SERVER if rng.random() < 0.5 else PairKind.SERVER_TO_TD
            tau = pair_matching_degree(terminals[src].knowledge, SERVER_KNOWLEDGE)
            pairs.append(TrafficPair(id=len(pairs), kind=kind, src_td=src,
                                     dst_td=None, tau=tau))
        else:
            if cfg.n_td - cursor < 2:
                break  # a lone leftover terminal stays idle this drop
            src, dst = int(order[cursor]), int(order[cursor + 1])
            cursor += 2
            tau = pair_matching_degree(terminals[src].knowledge, terminals[dst].knowledge)
            pairs.append(TrafficPair(id=len(pairs), kind=PairKind.TD_TO_TD,
                                     src_td=src, dst_td=dst, tau=tau))

    return NetworkSnapshot(config=cfg, base_stations=tuple(stations),
                           terminals=terminals, pairs=tuple(pairs), fading=fading)


def _probe_message_rate(cfg: SimConfig, tau: float, c: float,
                        sinr_db: float, bandwidth: float) -> float:
    """Solo message-rate estimate at a probe channel, best mode."""
    acc, msg_len, _ = mode_profile(cfg, tau, c, sinr_db)
    rate_bits = bit_rate(bandwidth, 10.0 ** (sinr_db / 10.0)) if bandwidth > 0 else 0.0
    return float(rate_bits / msg_len * acc)


def prepare_drop(snapshot: NetworkSnapshot, kb_sync: bool = True,
                 payload_bits: float = DEFAULT_PAYLOAD_BITS_PER_VERSION,
                 cost_weight: float = DEFAULT_COST_WEIGHT):
    """Knowledge alignment plus mode-selection probes over a fresh drop.

    Returns the prepared snapshot and the throughput-equivalent penalty of the
    accepted knowledge transfers.  Server-side profiles are always at the
    latest version, so single-hop pairs may download from the service layer.
    """
    cfg = snapshot.config
    probes = full_band_probe(snapshot)
    terminals = list(snapshot.terminals)
    pairs = []
    penalty = 0.0
    for pair in snapshot.pairs:
        tau = pair.tau
        probe_db, probe_bw = probes[pair.id]
        c = pair_coding_ability(snapshot, pair)
        if kb_sync:
            if pair.kind is PairKind.TD_TO_TD:
                other = terminals[pair.dst_td].knowledge
            else:
                other = SERVER_KNOWLEDGE
            session = SyncSession(terminals[pair.src_td].knowledge, other,
                                  payload_bits_per_version=payload_bits)
            exchange_versions(session)
            cost_bits = transfer_cost_bits(session)
            aligned_tau = min(session.profile_a.base_match, session.profile_b.base_match)
            gain = (_probe_message_rate(cfg, aligned_tau, c, probe_db, probe_bw)
                    - _probe_message_rate(cfg, tau, c, probe_db, probe_bw))
            if decide_update(session, gain, cost_bits, cost_weight):
                _, (prof_src, prof_other) = complete_transfer(session)
                terminals[pair.src_td] = replace(terminals[pair.src_td], knowledge=prof_src)
                if pair.kind is PairKind.TD_TO_TD:
                    terminals[pair.dst_td] = replace(terminals[pair.dst_td],
                                                     knowledge=prof_other)
                tau = pair_matching_degree(prof_src, prof_other)
                penalty += cost_weight * session.transferred
        mode = select_mode(cfg, tau, c, probe_db)
        pairs.append(replace(pair, tau=tau, mode=mode))
    prepared = replace(snapshot, terminals=tuple(terminals), pairs=tuple(pairs))
    return prepared, penalty


_STRATEGY_FUNCS = {
    STRATEGY_KB_AWARE: lambda snap, grid: allocate_kb_aware(snap),
    STRATEGY_MAXSINR_WF: lambda snap, grid: allocate_maxsinr_waterfill(snap),
    STRATEGY_MAXSINR_EVEN: lambda snap, grid: allocate_maxsinr_even(snap),
    STRATEGY_ORACLE: lambda snap, grid: oracle_exhaustive(snap, grid),
}


def run_drop(snapshot: NetworkSnapshot, strategy: str, kb_sync: bool = True,
             oracle_grid: int = 8) -> MetricReport:
    """Full per-drop pipeline: alignment, mode probes, allocation, metrics.

    The knowledge-transfer penalty is subtracted from the throughput once per
    drop (floored at zero); efficiency metrics follow the adjusted value.
    """
    if strategy not in _STRATEGY_FUNCS:
        raise ConfigError([RangeError("strategy", strategy, ", ".join(STRATEGY_IDS))])
    prepared, penalty = prepare_drop(snapshot, kb_sync=kb_sync)
    decision = _STRATEGY_FUNCS[strategy](prepared, oracle_grid)
    report = system_metrics(prepared, decision)
    if penalty > 0.0:
        stm = max(report.stm - penalty, 0.0)
        total_bw = sum(b.bw_budget for b in snapshot.base_stations)
        report = replace(
            report,
            stm=stm,
            sse=stm / total_bw if total_bw > 0 else 0.0,
            see=report.see * (stm / report.stm) if report.stm > 0 else 0.0,
        )
    return report


@dataclass(frozen=True)
class SweepSpec:
    vary: str
    values: tuple
    strategies: tuple[str, ...]
    config: SimConfig
    n_drops: int
    seed: int
    kb_sync: bool = True
    oracle_grid: int = 8


@dataclass(frozen=True)
class SweepRow:
    sweep_var: str
    sweep_value: float
    strategy: str
    mean_stm: float
    std_stm: float
    mean_sse: float
    mean_see: float
    n_drops: int


@dataclass(frozen=True)
class SweepTable:
    rows: tuple[SweepRow, ...]
    spec: SweepSpec


def _validate_spec(spec: SweepSpec) -> None:
    bad = []
    if spec.vary not in SWEEP_VARS:
        bad.append(RangeError("vary", spec.vary, ", ".join(SWEEP_VARS)))
    if not spec.values:
        bad.append(RangeError("values", spec.values, "non-empty"))
    elif any(b <= a for a, b in zip(spec.values, spec.values[1:])):
        bad.append(RangeError("values", spec.values, "strictly increasing"))
    if not spec.strategies:
        bad.append(RangeError("strategies", spec.strategies, "non-empty"))
    else:
        for s in spec.strategies:
            if s not in STRATEGY_IDS:
                bad.append(RangeError("strategies", s, ", ".join(STRATEGY_IDS)))
    if spec.n_drops < 1:
        bad.append(RangeError("n_drops", spec.n_drops, ">= 1"))
    if bad:
        raise ConfigError(bad)


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepTable:
    """Evaluate every (value, strategy) cell over common per-drop networks.

    Drops may run concurrently; the reduction always happens in drop-index
    order, so results are identical at any worker count.
    """
    _validate_spec(spec)
    rows: list[SweepRow] = []
    for value in spec.values:
        cfg_v = validate_config(replace(spec.config, seed=spec.seed,
                                        **{spec.vary: value}))

        def evaluate(drop_index: int):
            snap = generate_drop(cfg_v, drop_index)
            return [run_drop(snap, s, kb_sync=spec.kb_sync,
                             oracle_grid=spec.oracle_grid)
                    for s in spec.strategies]

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                per_drop = list(pool.map(evaluate, range(spec.n_drops)))
        else:
            per_drop = [evaluate(d) for d in range(spec.n_drops)]

        for strategy in sorted(spec.strategies):
            si = spec.strategies.index(strategy)
            stm = np.array([per_drop[d][si].stm for d in range(spec.n_drops)])
            sse = np.array([per_drop[d][si].sse for d in range(spec.n_drops)])
            see = np.array([per_drop[d][si].see for d in range(spec.n_drops)])
            rows.append(SweepRow(
                sweep_var=spec.vary, sweep_value=float(value), strategy=strategy,
                mean_stm=float(stm.mean()), std_stm=float(stm.std()),
                mean_sse=float(sse.mean()), mean_see=float(see.mean()),
                n_drops=spec.n_drops))
    return SweepTable(rows=tuple(rows), spec=spec)


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def write_csv(table: SweepTable, path) -> None:
    """Write the table and a `.meta` sidecar; both are byte-deterministic."""
    lines = [CSV_HEADER]
    for r in table.rows:
        lines.append(",".join([
            r.sweep_var, _fmt(r.sweep_value), r.strategy, _fmt(r.mean_stm),
            _fmt(r.std_stm), _fmt(r.mean_sse), _fmt(r.mean_see), str(r.n_drops)]))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")

    echo = replace(table.spec.config, seed=table.spec.seed)
    meta = [
        f"artifact_version = {__version__}",
        f"prng = {PRNG_NAME}",
        "stream_rule = seed XOR (drop_index * 0x9E3779B97F4A7C15) mod 2**64",
        f"seed = {table.spec.seed}",
        f"vary = {table.spec.vary}",
        "values = " + ",".join(_fmt(v) for v in table.spec.values),
        "strategies = " + ",".join(table.spec.strategies),
        f"kb_sync = {'on' if table.spec.kb_sync else 'off'}",
        "",
        "# configuration echo",
        *config_lines(echo),
    ]
    with open(f"{path}.meta", "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(meta) + "\n")
