"""Resource-management strategies over one drop.

Three production strategies plus a test oracle:

* ``kb_aware``     -- greedy association driven by estimated semantic message
                      rates, then per-station water-filling weighted by
                      accuracy per transmitted bit.
* ``maxsinr_wf``   -- max-SINR association, unweighted water-filling.
* ``maxsinr_even`` -- max-SINR association, equal split.
* ``oracle``       -- exhaustive search on a discrete bandwidth grid, guarded
                      to tiny instances.

All strategies are pure functions of the snapshot and deterministic; ties
break to the lowest station id everywhere.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .channel import gain_matrix
from .errors import ConvergenceError, DomainError, SizeError
from .model import (Direction, Endpoint, NetworkSnapshot, all_endpoints,
                    endpoint_terminal, pair_coding_ability)
from .semantics import mode_profile, system_metrics

LN2 = math.log(2.0)

STRATEGY_KB_AWARE = "kb_aware"
STRATEGY_MAXSINR_WF = "maxsinr_wf"
STRATEGY_MAXSINR_EVEN = "maxsinr_even"
STRATEGY_ORACLE = "oracle"
STRATEGY_IDS = (STRATEGY_KB_AWARE, STRATEGY_MAXSINR_WF, STRATEGY_MAXSINR_EVEN,
                STRATEGY_ORACLE)

ORACLE_MAX_ENDPOINTS = 4
ORACLE_MAX_BS = 2
ORACLE_MAX_GRID = 8


@dataclass(frozen=True)
class AllocationDecision:
    """Serving station per radio endpoint plus the bandwidth shares.

    ``bw`` is keyed by (station id, endpoint); per-station shares sum to the
    station's budget whenever it serves at least one endpoint.
    """

    assoc: dict[Endpoint, int]
    bw: dict[tuple[int, Endpoint], float]
    strategy: str


@dataclass
class _Workspace:
    """Vectorized view of a snapshot's endpoints for the allocators."""

    endpoints: list[Endpoint]
    tau: np.ndarray       # (E,) pair knowledge match
    ability: np.ndarray   # (E,) pair coding ability
    q: np.ndarray         # (E, n_bs) received power over noise density, Hz
    budgets: np.ndarray   # (n_bs,)


def _workspace(snapshot: NetworkSnapshot) -> _Workspace:
    cfg = snapshot.config
    eps = all_endpoints(snapshot)
    n_ep = len(eps)
    budgets = np.array([b.bw_budget for b in snapshot.base_stations], dtype=float)
    if n_ep == 0:
        return _Workspace(eps, np.empty(0), np.empty(0),
                          np.empty((0, budgets.size)), budgets)
    gains = gain_matrix(snapshot)
    td = np.empty(n_ep, dtype=int)
    is_dl = np.empty(n_ep, dtype=bool)
    tau = np.empty(n_ep)
    ability = np.empty(n_ep)
    for i, (pid, direction) in enumerate(eps):
        pair = snapshot.pairs[pid]
        td[i] = endpoint_terminal(pair, direction)
        is_dl[i] = direction is Direction.DOWNLINK
        tau[i] = pair.tau
        ability[i] = pair_coding_ability(snapshot, pair)
    td_power = np.array([snapshot.terminals[t].tx_power for t in td])
    bs_power = np.array([b.tx_power for b in snapshot.base_stations])
    p_tx = np.where(is_dl[:, None], bs_power[None, :], td_power[:, None])
    q = p_tx * gains[td, :] / cfg.noise_psd
    return _Workspace(eps, tau, ability, q, budgets)


# ---------------------------------------------------------------------------
# association


def associate_max_sinr(snapshot: NetworkSnapshot) -> dict[Endpoint, int]:
    """Attach every endpoint to the station with the best full-band SINR."""
    ws = _workspace(snapshot)
    if not ws.endpoints:
        return {}
    full_band = ws.q / ws.budgets[None, :]
    best = np.argmax(full_band, axis=1)  # argmax takes the lowest id on ties
    return {ep: int(best[i]) for i, ep in enumerate(ws.endpoints)}


def full_band_probe(snapshot: NetworkSnapshot) -> dict[int, tuple[float, float]]:
    """Per-pair probe channel: (SINR in dB, bandwidth in Hz).

    Each endpoint probes its max-SINR station at the full budget; two-hop
    pairs report the weaker hop, matching end-to-end channel awareness.
    """
    ws = _workspace(snapshot)
    out: dict[int, tuple[float, float]] = {}
    if not ws.endpoints:
        return out
    full_band = ws.q / ws.budgets[None, :]
    best = np.argmax(full_band, axis=1)
    rows = np.arange(len(ws.endpoints))
    gam = full_band[rows, best]
    bw = ws.budgets[best]
    for i, (pid, _) in enumerate(ws.endpoints):
        prev = out.get(pid)
        if prev is None or gam[i] < prev[0]:
            out[pid] = (float(gam[i]), float(bw[i]))
    return {pid: (10.0 * math.log10(g) if g > 0 else float("-inf"), b)
            for pid, (g, b) in out.items()}


# ---------------------------------------------------------------------------
# bandwidth splits


def bandwidth_even(snapshot: NetworkSnapshot,
                   assoc: dict[Endpoint, int]) -> dict[tuple[int, Endpoint], float]:
    """Each station splits its budget equally among its served endpoints."""
    counts: dict[int, int] = {}
    for b in assoc.values():
        counts[b] = counts.get(b, 0) + 1
    return {(b, ep): snapshot.base_stations[b].bw_budget / counts[b]
            for ep, b in assoc.items()}


def _g(x):
    """ln(1+x) - x/(1+x): the ln-scaled water-filling marginal.

    A short series below 1e-4 avoids the catastrophic cancellation of the
    direct form, which otherwise collapses to 0 for very weak lanes.
    """
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(arr)
    small = arr < 1e-4
    xs = arr[small]
    out[small] = xs * xs * (0.5 - xs * (2.0 / 3.0 - xs * 0.75))
    xl = arr[~small]
    out[~small] = np.log1p(xl) - xl / (1.0 + xl)
    if np.ndim(x) == 0:
        return float(out[0])
    return out.reshape(np.shape(x))


def marginal_utility(bandwidth, q):
    """d/dB of B*log2(1 + q/B): the water-filling marginal rate."""
    return _g(q / bandwidth) / LN2


def _invert_g(c, x0=None):
    """Solve _g(x) = c for x > 0 (vectorized, bracket-safeguarded Newton).

    Lanes with c beyond the representable marginal range are pinned to the
    upper bracket; their bandwidth q/x is effectively zero.
    """
    c = np.asarray(c, dtype=float)
    with np.errstate(over="ignore"):
        hi = np.exp(np.minimum(c, 700.0) + 1.0)  # _g(e^(1+c)) >= c for c > 0
    clamped = c > 700.0
    lo = np.zeros_like(c)
    x = np.sqrt(2.0 * c) if x0 is None else np.asarray(x0, dtype=float).copy()
    x = np.minimum(np.maximum(x, 1e-300), hi)
    x = np.where(clamped, hi, x)
    for _ in range(100):
        f = _g(x) - c
        lo = np.where(f < 0, x, lo)
        hi = np.where(f > 0, x, hi)
        done = clamped | (np.abs(f) <= 1e-12 * np.maximum(c, 1e-300)) \
            | (hi - lo <= 1e-12 * hi)
        if np.all(done):
            break
        gp = (x / (1.0 + x)) * (1.0 / (1.0 + x))
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            xn = x - f / gp
        bad = ~np.isfinite(xn) | (xn <= lo) | (xn >= hi)
        x = np.where(done, x, np.where(bad, 0.5 * (lo + hi), xn))
    return x


def _waterfill_arrays(q, u, groups, budgets, max_outer=200):
    """Weighted water-filling over bandwidth, all station groups in lockstep.

    Maximizes sum_i u_i * B_i * log2(1 + q_i / B_i) per group subject to the
    group budget via bisection on the dual multiplier; the inner equation
    u * f'(B) = lambda is solved by a safeguarded Newton iteration on the
    strictly decreasing marginal.  Zero-weight endpoints receive nothing.
    """
    q = np.asarray(q, dtype=float)
    u = np.asarray(u, dtype=float)
    groups = np.asarray(groups, dtype=int)
    n_ep = q.size
    bw = np.zeros(n_ep)
    if n_ep == 0:
        return bw

    n_groups = budgets.size
    present = np.bincount(groups, minlength=n_groups) > 0
    pos_counts = np.bincount(groups[u > 0], minlength=n_groups)
    if np.any(present & (pos_counts == 0)):
        raise DomainError("each serving station needs at least one positive weight")

    solo = (u > 0) & (pos_counts[groups] == 1)
    bw[solo] = budgets[groups[solo]]

    sel = np.flatnonzero((u > 0) & (pos_counts[groups] >= 2))
    if sel.size == 0:
        return bw
    qa, ua, ga = q[sel], u[sel], groups[sel]
    gids = np.unique(ga)
    remap = np.zeros(n_groups, dtype=int)
    remap[gids] = np.arange(gids.size)
    grp = remap[ga]
    bud = budgets[gids]
    cnt = pos_counts[gids]

    # initial multiplier bracket from the even-split marginals; floors keep
    # the geometric bisection away from an absorbing zero
    m = ua * _g(qa * cnt[grp] / bud[grp]) / LN2
    lam_lo = np.full(gids.size, np.inf)
    np.minimum.at(lam_lo, grp, m)
    lam_hi = np.full(gids.size, -np.inf)
    np.maximum.at(lam_hi, grp, m)
    lam_lo = np.maximum(0.5 * lam_lo, 1e-300)
    lam_hi = np.maximum(2.0 * lam_hi, 2e-300)

    warm = {"x": None}

    def alloc_at(lam):
        x = _invert_g(np.maximum(lam[grp] * LN2 / ua, 1e-280), warm["x"])
        warm["x"] = x
        with np.errstate(over="ignore"):
            shares = qa / x
        return shares, np.bincount(grp, weights=shares, minlength=gids.size)

    iters = 0
    while iters < max_outer:  # phase 1: bracket the multiplier
        iters += 1
        _, s_lo = alloc_at(lam_lo)
        _, s_hi = alloc_at(lam_hi)
        need_lo = s_lo < bud
        need_hi = s_hi > bud
        if not (need_lo.any() or need_hi.any()):
            break
        lam_lo = np.where(need_lo, lam_lo * 0.25, lam_lo)
        lam_hi = np.where(need_hi, lam_hi * 4.0, lam_hi)

    shares = None
    sums = None
    while iters < max_outer:  # phase 2: bisect (geometric midpoint)
        iters += 1
        lam = np.sqrt(lam_lo * lam_hi)
        shares, sums = alloc_at(lam)
        if np.all(np.abs(sums - bud) <= 1e-12 * bud):
            break
        too_much = sums > bud
        lam_lo = np.where(too_much, lam, lam_lo)
        lam_hi = np.where(too_much, lam_hi, lam)

    if sums is None or np.any(np.abs(sums - bud) > 1e-6 * bud):
        raise ConvergenceError(
            f"water-filling missed its tolerance within {max_outer} iterations")

    bw[sel] = shares * (bud / sums)[grp]  # exact budget conservation
    return bw


def bandwidth_waterfill(snapshot: NetworkSnapshot, assoc: dict[Endpoint, int],
                        weights: dict[Endpoint, float] | None = None,
                        max_outer: int = 200) -> dict[tuple[int, Endpoint], float]:
    """Split every station's budget by (optionally weighted) water-filling."""
    ws = _workspace(snapshot)
    if not ws.endpoints:
        return {}
    groups = np.array([assoc[ep] for ep in ws.endpoints], dtype=int)
    q = ws.q[np.arange(len(ws.endpoints)), groups]
    if weights is None:
        u = np.ones(len(ws.endpoints))
    else:
        u = np.array([float(weights[ep]) for ep in ws.endpoints])
        if np.any(u < 0):
            raise DomainError("water-filling weights must be >= 0")
    bw = _waterfill_arrays(q, u, groups, ws.budgets, max_outer=max_outer)
    return {(int(groups[i]), ep): float(bw[i]) for i, ep in enumerate(ws.endpoints)}


# ---------------------------------------------------------------------------
# knowledge-aware strategy


def _rate_cube(cfg, ws: _Workspace, kmax: int) -> np.ndarray:
    """r[e, b, k]: estimated message rate of endpoint e on station b when the
    station's budget is split k ways (k = 0 column is zero)."""
    n_ep, n_bs = ws.q.shape
    k = np.arange(1, kmax + 1, dtype=float)
    shares = ws.budgets[:, None] / k[None, :]          # (n_bs, kmax)
    gam = ws.q[:, :, None] / shares[None, :, :]        # (E, n_bs, kmax)
    gam_db = 10.0 * np.log10(gam)
    acc, msg_len, _ = mode_profile(cfg, ws.tau[:, None, None],
                                   ws.ability[:, None, None], gam_db)
    rates = np.zeros((n_ep, n_bs, kmax + 1))
    rates[:, :, 1:] = shares[None, :, :] * np.log2(1.0 + gam) / msg_len * acc
    return rates


def allocate_kb_aware(snapshot: NetworkSnapshot, max_outer: int = 200,
                      improvement_passes: int = 20,
                      trace: list | None = None) -> AllocationDecision:
    """Knowledge-aware association and bandwidth split.

    Stage A greedily assigns endpoints (best estimated semantic message rate
    first) to the station where their marginal contribution to the estimated
    system throughput is largest, assuming even sharing, then lets endpoints
    move while a move strictly improves that estimate.  Stage B water-fills
    each station with weights accuracy/length frozen at the even-share probe.

    ``trace``, when given, collects the estimated system throughput after the
    greedy build and after every improvement pass (it never decreases).
    """
    cfg = snapshot.config
    ws = _workspace(snapshot)
    n_ep = len(ws.endpoints)
    if n_ep == 0:
        return AllocationDecision(assoc={}, bw={}, strategy=STRATEGY_KB_AWARE)
    n_bs = ws.budgets.size

    state = {"kmax": min(n_ep + 1, max(10, 6 * math.ceil(n_ep / n_bs)))}
    rates = _rate_cube(cfg, ws, state["kmax"])
    totals = np.zeros((n_bs, state["kmax"] + 1))  # per-station sums of rates at each split
    counts = np.zeros(n_bs, dtype=int)
    cur = np.full(n_ep, -1, dtype=int)
    bs_idx = np.arange(n_bs)

    def ensure_capacity(k_needed: int):
        nonlocal rates, totals
        if k_needed <= state["kmax"]:
            return
        state["kmax"] = min(n_ep + 1, max(k_needed, 2 * state["kmax"]))
        rates = _rate_cube(cfg, ws, state["kmax"])
        totals = np.zeros((n_bs, state["kmax"] + 1))
        for e in range(n_ep):
            if cur[e] >= 0:
                totals[cur[e]] += rates[e, cur[e]]

    score = rates[:, :, 1].max(axis=1)
    order = np.argsort(-score, kind="stable")

    for e in order:  # greedy build
        ensure_capacity(int(counts.max()) + 1)
        gain = rates[e, bs_idx, counts + 1] + totals[bs_idx, counts + 1] - totals[bs_idx, counts]
        b = int(np.argmax(gain))
        cur[e] = b
        totals[b] += rates[e, b]
        counts[b] += 1
    if trace is not None:
        trace.append(float(totals[bs_idx, counts].sum()))

    for _ in range(improvement_passes):
        moved = False
        for e in order:
            ensure_capacity(int(counts.max()) + 1)
            b0 = int(cur[e])
            n0 = int(counts[b0])
            join = rates[e, bs_idx, counts + 1] + totals[bs_idx, counts + 1] - totals[bs_idx, counts]
            leave = totals[b0, n0 - 1] - rates[e, b0, n0 - 1] - totals[b0, n0]
            delta = join + leave
            delta[b0] = 0.0
            b1 = int(np.argmax(delta))
            if b1 != b0 and delta[b1] > 0.0:
                totals[b0] -= rates[e, b0]
                totals[b1] += rates[e, b1]
                counts[b0] -= 1
                counts[b1] += 1
                cur[e] = b1
                moved = True
        if trace is not None:
            trace.append(float(totals[bs_idx, counts].sum()))
        if not moved:
            break

    assoc = {ep: int(cur[i]) for i, ep in enumerate(ws.endpoints)}
    rows = np.arange(n_ep)
    probe_gam = ws.q[rows, cur] * counts[cur] / ws.budgets[cur]
    probe_db = 10.0 * np.log10(probe_gam)
    acc, msg_len, _ = mode_profile(cfg, ws.tau, ws.ability, probe_db)
    weights = {ep: float(acc[i] / msg_len[i]) for i, ep in enumerate(ws.endpoints)}
    bw = bandwidth_waterfill(snapshot, assoc, weights, max_outer=max_outer)
    return AllocationDecision(assoc=assoc, bw=bw, strategy=STRATEGY_KB_AWARE)


def allocate_maxsinr_waterfill(snapshot: NetworkSnapshot,
                               max_outer: int = 200) -> AllocationDecision:
    assoc = associate_max_sinr(snapshot)
    bw = bandwidth_waterfill(snapshot, assoc, None, max_outer=max_outer)
    return AllocationDecision(assoc=assoc, bw=bw, strategy=STRATEGY_MAXSINR_WF)


def allocate_maxsinr_even(snapshot: NetworkSnapshot) -> AllocationDecision:
    assoc = associate_max_sinr(snapshot)
    return AllocationDecision(assoc=assoc, bw=bandwidth_even(snapshot, assoc),
                              strategy=STRATEGY_MAXSINR_EVEN)


# ---------------------------------------------------------------------------
# exhaustive oracle


def _compositions(total: int, parts: int):
    """Tuples of `parts` nonnegative ints summing to `total`, lexicographic."""
    if parts == 0:
        yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


def oracle_exhaustive(snapshot: NetworkSnapshot, grid_levels: int = 8) -> AllocationDecision:
    """Ground-truth optimum by enumerating every association and every
    per-station split on the discrete simplex.  Guarded to tiny instances.

    The first enumerated maximum wins, so ties break lexicographically in
    assignment order.
    """
    eps = all_endpoints(snapshot)
    n_bs = len(snapshot.base_stations)
    if len(eps) > ORACLE_MAX_ENDPOINTS:
        raise SizeError(f"{len(eps)} endpoints exceed the oracle limit {ORACLE_MAX_ENDPOINTS}")
    if n_bs > ORACLE_MAX_BS:
        raise SizeError(f"{n_bs} stations exceed the oracle limit {ORACLE_MAX_BS}")
    if not 1 <= grid_levels <= ORACLE_MAX_GRID:
        raise SizeError(f"grid_levels {grid_levels} outside [1, {ORACLE_MAX_GRID}]")

    budgets = [b.bw_budget for b in snapshot.base_stations]
    best_stm = -1.0
    best: AllocationDecision | None = None
    for assignment in itertools.product(range(n_bs), repeat=len(eps)):
        served: list[list[Endpoint]] = [[] for _ in range(n_bs)]
        for i, b in enumerate(assignment):
            served[b].append(eps[i])
        assoc = {ep: assignment[i] for i, ep in enumerate(eps)}
        split_spaces = [list(_compositions(grid_levels, len(served[b])))
                        for b in range(n_bs)]
        for splits in itertools.product(*split_spaces):
            bw = {}
            for b in range(n_bs):
                unit = budgets[b] / grid_levels
                for ep, k in zip(served[b], splits[b]):
                    bw[(b, ep)] = k * unit
            decision = AllocationDecision(assoc=assoc, bw=bw, strategy=STRATEGY_ORACLE)
            stm = system_metrics(snapshot, decision).stm
            if stm > best_stm:
                best_stm = stm
                best = decision
    assert best is not None
    return best
