"""Command-line front end for the simulator.

Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 solver
convergence failure, 4 size-guard violation.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .allocator import (STRATEGY_IDS, STRATEGY_KB_AWARE, STRATEGY_MAXSINR_EVEN,
                        STRATEGY_MAXSINR_WF, STRATEGY_ORACLE)
from .config import SimConfig, load_config
from .errors import ConfigError, ConvergenceError, RangeError, SizeError
from .model import all_endpoints
from .simkit import SweepSpec, generate_drop, run_sweep, write_csv

_DEFAULT_STRATEGIES = ",".join(
    (STRATEGY_KB_AWARE, STRATEGY_MAXSINR_WF, STRATEGY_MAXSINR_EVEN))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sran-sim",
        description="System-level semantic-aware RAN simulator: seeded Monte "
                    "Carlo drops, resource allocation strategies, CSV reports.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evaluate one strategy over the configured drops")
    run.add_argument("--config", required=True, help="key = value configuration file")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--strategy", default=STRATEGY_KB_AWARE, choices=list(STRATEGY_IDS))
    run.add_argument("--kb-sync", choices=["on", "off"], default="on",
                     help="knowledge-base alignment before each drop")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--workers", type=int, default=1)

    sweep = sub.add_parser("sweep", help="sweep one parameter across strategies")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--vary", required=True, choices=["n_td", "n_bs", "tau_mean"])
    sweep.add_argument("--values", required=True,
                       help="comma-separated, strictly increasing sweep values")
    sweep.add_argument("--strategies", default=_DEFAULT_STRATEGIES)
    sweep.add_argument("--seed", type=int, default=None)
    sweep.add_argument("--out", required=True)
    sweep.add_argument("--workers", type=int, default=1)

    oracle = sub.add_parser("oracle", help="compare strategies against the exhaustive oracle")
    oracle.add_argument("--config", required=True)
    oracle.add_argument("--max-endpoints", type=int, default=3,
                        help="reject drops with more radio endpoints than this")
    oracle.add_argument("--grid", type=int, default=8, help="bandwidth grid levels")
    oracle.add_argument("--seed", type=int, default=None)
    oracle.add_argument("--out", required=True)
    return parser


def _load(path: str, seed: int | None) -> SimConfig:
    try:
        cfg = load_config(path)
    except OSError as exc:
        raise ConfigError([RangeError("config", path, f"readable file ({exc})")])
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    return cfg


def _emit(table, out_dir: str, filename: str) -> int:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / filename
    write_csv(table, path)
    for row in table.rows:
        print(f"{row.sweep_var}={row.sweep_value:g} {row.strategy}: "
              f"mean STM {row.mean_stm:.6g} msg/s (std {row.std_stm:.4g}, "
              f"{row.n_drops} drops)")
    print(f"wrote {path} and {path}.meta")
    return 0


def _cmd_run(args) -> int:
    cfg = _load(args.config, args.seed)
    spec = SweepSpec(vary="n_td", values=(cfg.n_td,), strategies=(args.strategy,),
                     config=cfg, n_drops=cfg.n_drops, seed=cfg.seed,
                     kb_sync=args.kb_sync == "on")
    return _emit(run_sweep(spec, workers=args.workers), args.out, "results.csv")


def _cmd_sweep(args) -> int:
    cfg = _load(args.config, args.seed)
    try:
        if args.vary == "tau_mean":
            values = tuple(float(v) for v in args.values.split(","))
        else:
            values = tuple(int(v) for v in args.values.split(","))
    except ValueError:
        raise ConfigError([RangeError("values", args.values, "comma-separated numbers")])
    strategies = tuple(s.strip() for s in args.strategies.split(",") if s.strip())
    spec = SweepSpec(vary=args.vary, values=values, strategies=strategies,
                     config=cfg, n_drops=cfg.n_drops, seed=cfg.seed)
    return _emit(run_sweep(spec, workers=args.workers), args.out, "sweep.csv")


def _cmd_oracle(args) -> int:
    cfg = _load(args.config, args.seed)
    for drop in range(cfg.n_drops):
        n_ep = len(all_endpoints(generate_drop(cfg, drop)))
        if n_ep > args.max_endpoints:
            raise SizeError(f"drop {drop} has {n_ep} endpoints "
                            f"(limit {args.max_endpoints})")
    spec = SweepSpec(vary="n_td", values=(cfg.n_td,),
                     strategies=(STRATEGY_KB_AWARE, STRATEGY_MAXSINR_WF,
                                 STRATEGY_MAXSINR_EVEN, STRATEGY_ORACLE),
                     config=cfg, n_drops=cfg.n_drops, seed=cfg.seed,
                     oracle_grid=args.grid)
    return _emit(run_sweep(spec), args.out, "oracle.csv")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_oracle(args)
    except (ConfigError, RangeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return 3
    except SizeError as exc:
        print(f"size-guard error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


def run_main() -> None:
    raise SystemExit(main())
