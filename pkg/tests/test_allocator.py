import math

import numpy as np
import pytest

from conftest import build_snapshot, make_config, server_pair, station, td_pair, terminal
from sran.allocator import (AllocationDecision, allocate_kb_aware,
                            allocate_maxsinr_even, allocate_maxsinr_waterfill,
                            associate_max_sinr, bandwidth_even,
                            bandwidth_waterfill, marginal_utility,
                            oracle_exhaustive)
from sran.allocator import _waterfill_arrays
from sran.channel import gain_matrix
from sran.errors import ConvergenceError, DomainError, SizeError
from sran.model import Direction, PairKind, all_endpoints
from sran.semantics import system_metrics

LN2 = math.log(2.0)


# ---------------------------------------------------------------------------
# independent oracles used by the solver tests


def grid_search_waterfill(q, u, budget, levels):
    """Brute-force maximizer of sum u_i * B_i * log2(1 + q_i/B_i) on the
    bandwidth simplex, enumerated at `levels` ticks per axis."""
    n = len(q)
    best_val, best_alloc = -np.inf, None

    def objective(alloc):
        total = 0.0
        for qi, ui, bi in zip(q, u, alloc):
            if bi > 0 and ui > 0:
                total += ui * bi * math.log2(1.0 + qi / bi)
        return total

    def rec(i, remaining_ticks, alloc):
        nonlocal best_val, best_alloc
        if i == n - 1:
            candidate = alloc + [remaining_ticks]
            val = objective([t * budget / levels for t in candidate])
            if val > best_val:
                best_val, best_alloc = val, candidate
            return
        for t in range(remaining_ticks + 1):
            rec(i + 1, remaining_ticks - t, alloc + [t])

    rec(0, levels, [])
    return best_val, [t * budget / levels for t in best_alloc]


def waterfill_objective(q, u, alloc):
    total = 0.0
    for qi, ui, bi in zip(q, u, alloc):
        if bi > 0:
            total += ui * bi * math.log2(1.0 + qi / bi)
    return total


# ---------------------------------------------------------------------------
# association


def _uplink_snapshot(cfg, bs_positions, td_positions, fading=None, **td_kw):
    stations = [station(cfg, i, p) for i, p in enumerate(bs_positions)]
    tds = [terminal(cfg, i, p, **td_kw) for i, p in enumerate(td_positions)]
    pairs = [server_pair(i, i, tds) for i in range(len(tds))]
    return build_snapshot(cfg, stations, tds, pairs, fading)


def test_single_station_takes_everyone():
    cfg = make_config(n_bs=1, n_td=3)
    snap = _uplink_snapshot(cfg, [(1000.0, 1000.0)],
                            [(100.0, 50.0), (1900.0, 1950.0), (1000.0, 900.0)])
    assoc = associate_max_sinr(snap)
    assert set(assoc.values()) == {0}


def test_equidistant_tie_goes_to_lowest_id():
    cfg = make_config(n_bs=2, n_td=1)
    snap = _uplink_snapshot(cfg, [(500.0, 1000.0), (1500.0, 1000.0)],
                            [(1000.0, 1000.0)])
    assoc = associate_max_sinr(snap)
    assert assoc[(0, Direction.UPLINK)] == 0


def test_association_matches_bruteforce_argmax():
    cfg = make_config(n_bs=3, n_td=6)
    rng = np.random.default_rng(5)
    snap = _uplink_snapshot(
        cfg,
        [tuple(p) for p in rng.uniform(0, 2000, (3, 2))],
        [tuple(p) for p in rng.uniform(0, 2000, (6, 2))],
        fading=rng.exponential(1.0, (6, 3)))
    assoc = associate_max_sinr(snap)
    gains = gain_matrix(snap)
    for i, pair in enumerate(snap.pairs):
        ep = (pair.id, Direction.UPLINK)
        best, best_g = None, -np.inf
        for b, bs in enumerate(snap.base_stations):
            g = cfg.tx_power_td * gains[pair.src_td, b] / (cfg.noise_psd * bs.bw_budget)
            if g > best_g:
                best, best_g = b, g
        assert assoc[ep] == best


# ---------------------------------------------------------------------------
# even split


def test_even_split_shares_and_conservation():
    cfg = make_config(n_bs=2, n_td=4)
    snap = _uplink_snapshot(cfg, [(500.0, 1000.0), (1500.0, 1000.0)],
                            [(400.0, 900.0), (450.0, 1100.0), (550.0, 1000.0), (600.0, 950.0)])
    assoc = {ep: 0 for ep in all_endpoints(snap)}
    bw = bandwidth_even(snap, assoc)
    assert all(v == pytest.approx(cfg.bw_per_bs / 4) for v in bw.values())
    assert sum(bw.values()) == pytest.approx(cfg.bw_per_bs)
    assert all(key[0] == 0 for key in bw)  # the unused station allocates nothing


# ---------------------------------------------------------------------------
# water-filling


def test_marginal_utility_closed_form_anchor():
    # f'(B) at B = q equals 1 - 1/(2 ln 2)
    expected = 1.0 - 1.0 / (2.0 * LN2)
    assert marginal_utility(3.7e6, 3.7e6) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(0.27865, abs=5e-6)


def test_waterfill_symmetric_split():
    q = np.array([2e6, 2e6])
    bw = _waterfill_arrays(q, np.ones(2), np.zeros(2, dtype=int), np.array([1e7]))
    assert bw[0] == pytest.approx(5e6, rel=1e-9)
    assert bw[1] == pytest.approx(5e6, rel=1e-9)


def test_waterfill_single_endpoint_takes_budget():
    bw = _waterfill_arrays(np.array([5e5]), np.ones(1), np.zeros(1, dtype=int),
                           np.array([1e7]))
    assert bw[0] == pytest.approx(1e7)


def test_waterfill_matches_grid_search_oracle():
    q = [1e5, 1e6, 1e7]
    budget = 1e7
    grid_val, _ = grid_search_waterfill(q, [1.0] * 3, budget, 140)
    bw = _waterfill_arrays(np.array(q), np.ones(3), np.zeros(3, dtype=int),
                           np.array([budget]))
    solver_val = waterfill_objective(q, [1.0] * 3, bw)
    assert solver_val >= grid_val - 1e-3 * abs(grid_val)
    assert abs(solver_val - grid_val) <= 1e-3 * abs(grid_val)


def test_waterfill_kkt_and_conservation_random():
    rng = np.random.default_rng(17)
    for _ in range(100):
        n = int(rng.integers(2, 9))
        q = 10 ** rng.uniform(4.0, 9.0, n)
        u = 10 ** rng.uniform(-1.0, 1.0, n)
        budget = 10 ** rng.uniform(6.0, 7.5)
        bw = _waterfill_arrays(q, u, np.zeros(n, dtype=int), np.array([budget]))
        assert abs(bw.sum() - budget) <= 1e-9 * budget
        marginals = u * marginal_utility(bw, q)
        lam = marginals.mean()
        assert np.max(np.abs(marginals - lam)) <= 1e-6 * lam


def test_waterfill_zero_weight_gets_nothing():
    q = np.array([1e6, 1e6, 2e6])
    u = np.array([1.0, 0.0, 1.0])
    bw = _waterfill_arrays(q, u, np.zeros(3, dtype=int), np.array([1e7]))
    assert bw[1] == 0.0
    assert bw.sum() == pytest.approx(1e7, rel=1e-12)


def test_waterfill_all_zero_weights_rejected():
    with pytest.raises(DomainError):
        _waterfill_arrays(np.array([1e6]), np.array([0.0]),
                          np.zeros(1, dtype=int), np.array([1e7]))


def test_waterfill_iteration_budget_enforced():
    q = np.array([1e5, 3e6])
    with pytest.raises(ConvergenceError):
        _waterfill_arrays(q, np.ones(2), np.zeros(2, dtype=int),
                          np.array([1e7]), max_outer=1)


def test_waterfill_dict_interface_multi_station():
    cfg = make_config(n_bs=2, n_td=4)
    snap = _uplink_snapshot(cfg, [(500.0, 1000.0), (1500.0, 1000.0)],
                            [(400.0, 900.0), (600.0, 1100.0), (1400.0, 900.0), (1600.0, 1100.0)])
    assoc = associate_max_sinr(snap)
    bw = bandwidth_waterfill(snap, assoc)
    per_bs = {}
    for (b, _ep), v in bw.items():
        per_bs[b] = per_bs.get(b, 0.0) + v
    for b, total in per_bs.items():
        assert total == pytest.approx(cfg.bw_per_bs, rel=1e-9)


# ---------------------------------------------------------------------------
# knowledge-aware strategy


def test_kb_aware_all_zero_match_degrades_gracefully():
    cfg = make_config(n_bs=2, n_td=4, tau_mean=0.0)
    stations = [station(cfg, 0, (500.0, 1000.0)), station(cfg, 1, (1500.0, 1000.0))]
    tds = [terminal(cfg, i, (400.0 + 300 * i, 1000.0), base=0.0) for i in range(4)]
    pairs = [server_pair(i, i, tds) for i in range(4)]
    snap = build_snapshot(cfg, stations, tds, pairs)
    decision = allocate_kb_aware(snap)
    report = system_metrics(snap, decision)
    assert all(ev.mode.value == "bit" for ev in report.pair_evaluations)
    assert report.stm > 0


def test_kb_aware_prefers_knowledge_over_channel():
    cfg = make_config(n_bs=1, n_td=2)
    bs = station(cfg, 0, (1000.0, 1000.0))
    td_weak = terminal(cfg, 0, (1900.0, 1000.0), base=0.9, version=5, ability=1.0)
    td_strong = terminal(cfg, 1, (1010.0, 1000.0), base=0.1, version=5, ability=1.0)
    tds = [td_weak, td_strong]
    pairs = [server_pair(0, 0, tds), server_pair(1, 1, tds)]
    snap = build_snapshot(cfg, [bs], tds, pairs)

    kb = allocate_kb_aware(snap)
    flat = allocate_maxsinr_waterfill(snap)
    ep_weak = (0, Direction.UPLINK)
    assert kb.bw[(0, ep_weak)] >= flat.bw[(0, ep_weak)] - 1e-6


def test_kb_aware_single_pair_takes_full_budget():
    cfg = make_config(n_bs=1, n_td=1)
    bs = station(cfg, 0, (1000.0, 1000.0))
    td = terminal(cfg, 0, (800.0, 1000.0))
    pairs = [server_pair(0, 0, [td])]
    snap = build_snapshot(cfg, [bs], [td], pairs)
    decision = allocate_kb_aware(snap)
    ep = (0, Direction.UPLINK)
    assert decision.bw[(0, ep)] == pytest.approx(cfg.bw_per_bs)
    report = system_metrics(snap, decision)
    solo = system_metrics(snap, AllocationDecision(
        assoc={ep: 0}, bw={(0, ep): cfg.bw_per_bs}, strategy="maxsinr_even"))
    assert report.stm == pytest.approx(solo.stm, rel=1e-12)


def test_kb_aware_deterministic():
    cfg = make_config(n_bs=2, n_td=6)
    rng = np.random.default_rng(23)
    stations = [station(cfg, i, tuple(p)) for i, p in enumerate(rng.uniform(0, 2000, (2, 2)))]
    tds = [terminal(cfg, i, tuple(p), base=float(rng.uniform(0.2, 1.0)),
                    version=int(rng.integers(0, 6)), ability=float(rng.uniform(0.6, 1.0)))
           for i, p in enumerate(rng.uniform(0, 2000, (6, 2)))]
    pairs = [td_pair(0, 0, 1, tds), server_pair(1, 2, tds), server_pair(2, 3, tds),
             td_pair(3, 4, 5, tds)]
    snap = build_snapshot(cfg, stations, tds, pairs, rng.exponential(1.0, (6, 2)))
    first = allocate_kb_aware(snap)
    second = allocate_kb_aware(snap)
    assert first.assoc == second.assoc
    assert first.bw == second.bw


def test_kb_aware_improvement_passes_monotone():
    cfg = make_config(n_bs=3, n_td=12)
    rng = np.random.default_rng(31)
    stations = [station(cfg, i, tuple(p)) for i, p in enumerate(rng.uniform(0, 2000, (3, 2)))]
    tds = [terminal(cfg, i, tuple(p), base=float(rng.uniform(0.0, 1.0)),
                    version=int(rng.integers(0, 6)), ability=float(rng.uniform(0.6, 1.0)))
           for i, p in enumerate(rng.uniform(0, 2000, (12, 2)))]
    pairs = [server_pair(i, i, tds) for i in range(12)]
    snap = build_snapshot(cfg, stations, tds, pairs, rng.exponential(1.0, (12, 3)))
    trace = []
    allocate_kb_aware(snap, trace=trace)
    assert len(trace) >= 1
    assert all(b >= a - 1e-9 for a, b in zip(trace, trace[1:]))


# ---------------------------------------------------------------------------
# exhaustive oracle


def _tiny_snapshot(seed, n_bs=2, n_td=3, s2=False):
    cfg = make_config(n_bs=n_bs, n_td=n_td)
    rng = np.random.default_rng(seed)
    stations = [station(cfg, i, tuple(p)) for i, p in enumerate(rng.uniform(0, 2000, (n_bs, 2)))]
    tds = [terminal(cfg, i, tuple(p), base=float(rng.uniform(0.1, 1.0)),
                    version=int(rng.integers(0, 6)), ability=float(rng.uniform(0.6, 1.0)))
           for i, p in enumerate(rng.uniform(0, 2000, (n_td, 2)))]
    pairs = []
    if s2 and n_td >= 2:
        pairs.append(td_pair(0, 0, 1, tds))
        rest = range(2, n_td)
    else:
        rest = range(n_td)
    for t in rest:
        kind = PairKind.TD_TO_SERVER if rng.random() < 0.5 else PairKind.SERVER_TO_TD
        pairs.append(server_pair(len(pairs), t, tds, kind=kind))
    return build_snapshot(cfg, stations, tds, pairs, rng.exponential(1.0, (n_td, n_bs)))


def test_oracle_guards():
    with pytest.raises(SizeError):
        oracle_exhaustive(_tiny_snapshot(1, n_bs=2, n_td=3), grid_levels=9)
    big = _tiny_snapshot(2, n_bs=2, n_td=3, s2=True)  # 2 + 2 = 4 endpoints: fine
    oracle_exhaustive(big, grid_levels=2)
    too_many = _tiny_snapshot(3, n_bs=2, n_td=5)
    with pytest.raises(SizeError):
        oracle_exhaustive(too_many)
    cfg = make_config(n_bs=3, n_td=1)
    rng = np.random.default_rng(4)
    stations = [station(cfg, i, tuple(p)) for i, p in enumerate(rng.uniform(0, 2000, (3, 2)))]
    tds = [terminal(cfg, 0, (100.0, 100.0))]
    snap = build_snapshot(cfg, stations, tds, [server_pair(0, 0, tds)])
    with pytest.raises(SizeError):
        oracle_exhaustive(snap)


def test_oracle_single_pair_matches_kb_aware():
    snap = _tiny_snapshot(7, n_bs=1, n_td=1)
    oracle = oracle_exhaustive(snap, grid_levels=8)
    kb = allocate_kb_aware(snap)
    ep = list(oracle.assoc)[0]
    assert oracle.assoc == kb.assoc
    assert oracle.bw[(0, ep)] == pytest.approx(kb.bw[(0, ep)])
    assert system_metrics(snap, oracle).stm == pytest.approx(
        system_metrics(snap, kb).stm, rel=1e-12)


def test_oracle_dominates_even_baseline_on_grid_counts():
    snap = _tiny_snapshot(11, n_bs=2, n_td=2)
    oracle = oracle_exhaustive(snap, grid_levels=4)
    even = allocate_maxsinr_even(snap)
    assert system_metrics(snap, oracle).stm >= system_metrics(snap, even).stm - 1e-9


def test_oracle_bounds_strategies_on_seeded_instances():
    for seed in range(5):
        snap = _tiny_snapshot(100 + seed, n_bs=2, n_td=3, s2=(seed % 2 == 0))
        oracle_stm = system_metrics(snap, oracle_exhaustive(snap, grid_levels=8)).stm
        for alloc in (allocate_kb_aware, allocate_maxsinr_waterfill, allocate_maxsinr_even):
            stm = system_metrics(snap, alloc(snap)).stm
            assert stm <= oracle_stm * (1 + 1e-9)
