"""``fedmarket`` command line.

    fedmarket simulate|sweep-bids|bench-competitive|eval-robustness|market
        --config <path-or-bundled-name> [--seed <u64>] [--out <dir>] [--parallel N]

Exit codes: 0 success, 1 validation error, 2 I/O error, 3 internal
invariant violation. ``FEDMARKET_LOG`` sets the log level.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import market
from .clients import deviation_sweep
from .config import ScenarioConfig, load_config
from .errors import (
    FedMarketError,
    InvalidConfigError,
    InvalidInputError,
    InvalidInstanceError,
)
from .fedeval import consensus_error_by_adversaries
from .mechanism import run_simulation
from .money import format_nanos
from .records import (
    RATIO_COLUMNS,
    TRAJECTORY_COLUMNS,
    InvariantViolation,
    RunRecord,
    fmt_float,
    fmt_money,
    trajectory_rows,
    write_csv,
    write_manifest,
)

logger = logging.getLogger("fedmarket")

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_INTERNAL = 0, 1, 2, 3

SWEEP_COLUMNS = ("row_type", "client", "bid", "cumulative_utility", "total_transfer", "wins", "valuation")
SUMMARY_COLUMNS = (
    "mechanism",
    "trials",
    "evaluated",
    "mean_opt",
    "mean_revenue",
    "ratio_of_means",
    "worst_ratio",
    "zero_revenue_count",
)
ROBUSTNESS_COLUMNS = ("adversaries", "evaluators", "max_error")
MARKET_COLUMNS = RATIO_COLUMNS + ("feasible",)


def _map(fn, args, parallel):
    if parallel > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(fn, *zip(*args)))
    return [fn(*a) for a in args]


def _simulate_one(cfg: ScenarioConfig, seed: int):
    result = run_simulation(cfg.mechanism_config(seed), cfg.client_states())
    return RunRecord.from_result(result, cfg.scenario_hash(), seed).validate()


def cmd_simulate(cfg: ScenarioConfig, seeds, out_dir: Path, parallel=1):
    cfg.require("mechanism")
    files = []
    for seed, record in zip(seeds, _map(_simulate_one, [(cfg, s) for s in seeds], parallel)):
        json_path = out_dir / f"run_seed{seed}.json"
        json_path.write_text(record.dumps(), encoding="utf-8")
        files.append(json_path)
        files.append(write_csv(out_dir / f"trajectory_seed{seed}.csv", TRAJECTORY_COLUMNS, trajectory_rows(record.rounds)))
    return files


def _sweep_point(cfg: ScenarioConfig, seed: int, client: int, bid: float):
    return deviation_sweep(cfg.mechanism_config(seed), cfg.client_states(), client, [bid])[0]


def cmd_sweep_bids(cfg: ScenarioConfig, seeds, out_dir: Path, parallel=1):
    sweep = cfg.require("sweep")
    cfg.require("mechanism")
    i = sweep.client
    theta = cfg.clients[i].valuation
    files = []
    for seed in seeds:
        points = _map(_sweep_point, [(cfg, seed, i, b) for b in sweep.grid], parallel)
        rows = [("deviator", i, "", "", "", "", fmt_float(theta))]
        rows += [
            ("point", i, fmt_float(p.bid), fmt_money(p.cumulative_utility), format_nanos(p.total_transfer), p.wins, "")
            for p in points
        ]
        files.append(write_csv(out_dir / f"sweep_seed{seed}.csv", SWEEP_COLUMNS, rows))
    return files


def _bench_one(cfg: ScenarioConfig, seed: int):
    bench = cfg.require("bench")
    sampler = market.uniform_sampler(bench.num_agents, bench.low, bench.high)
    reports = {}
    for offset, name in enumerate(bench.mechanisms):
        rng = np.random.default_rng([seed, offset])
        reports[name] = market.measure_competitiveness(
            market.MECHANISMS[name], sampler, bench.trials, rng, alpha=bench.alpha
        )
    return reports


def cmd_bench_competitive(cfg: ScenarioConfig, seeds, out_dir: Path, parallel=1):
    cfg.require("bench")
    files = []
    for seed, reports in zip(seeds, _map(_bench_one, [(cfg, s) for s in seeds], parallel)):
        instance_rows, summary_rows = [], []
        for name, rep in reports.items():
            for idx, (opt, rev) in enumerate(zip(rep.opts, rep.revenues)):
                ratio = opt / rev if rev > 0 else None
                instance_rows.append((idx, name, fmt_float(rev), fmt_float(opt), fmt_float(ratio)))
            summary_rows.append(
                (
                    name,
                    rep.trials,
                    rep.evaluated,
                    fmt_float(rep.mean_opt),
                    fmt_float(rep.mean_revenue),
                    fmt_float(rep.ratio_of_means),
                    fmt_float(rep.worst_ratio),
                    rep.zero_revenue_count,
                )
            )
        files.append(write_csv(out_dir / f"bench_seed{seed}.csv", RATIO_COLUMNS, instance_rows))
        files.append(write_csv(out_dir / f"bench_summary_seed{seed}.csv", SUMMARY_COLUMNS, summary_rows))
    return files


def cmd_eval_robustness(cfg: ScenarioConfig, seeds, out_dir: Path, parallel=1):
    rob = cfg.require("robustness")
    files = []
    for seed in seeds:
        rows = consensus_error_by_adversaries(
            rob.evaluators,
            rob.offset,
            rob.honest_quality,
            rng=np.random.default_rng(seed),
            honest_noise=rob.honest_noise,
            trials=rob.trials,
        )
        csv_rows = [(a, rob.evaluators, fmt_float(err)) for a, err in rows]
        files.append(write_csv(out_dir / f"robustness_seed{seed}.csv", ROBUSTNESS_COLUMNS, csv_rows))
    return files


def _market_instances(section, rng):
    instances = []
    if section.buyers is not None:
        gain = market.build_gain(section.gain, len(section.sellers))
        instances.append(market.MarketInstance(tuple(section.sellers), tuple(section.buyers), gain))
    for _ in range(section.random_instances):
        instances.append(market.random_instance(rng, section.max_buyers, section.max_sellers))
    return instances


def cmd_market(cfg: ScenarioConfig, seeds, out_dir: Path, parallel=1):
    section = cfg.require("market")
    files = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        try:
            instances = _market_instances(section, rng)
        except (InvalidInputError, InvalidInstanceError) as exc:
            raise InvalidConfigError(str(exc), "experiment.market") from None
        rows = []
        for idx, inst in enumerate(instances):
            result = market.run_double_auction(inst, rng)
            report = market.check_feasibility(inst, result.allocation)
            if not report.feasible:
                raise InvariantViolation(f"instance {idx}: infeasible allocation {report.violations}")
            # reference benchmark: best single price on buyer values at full supply
            _, opt_unit = market.opt_single_price(inst.buyer_values)
            opt = opt_unit * inst.gain_fn(tuple(range(inst.m)))
            ratio = opt / result.revenue if result.revenue > 0 else None
            rows.append(
                (idx, "double_auction", fmt_float(result.revenue), fmt_float(opt), fmt_float(ratio), int(report.feasible))
            )
        files.append(write_csv(out_dir / f"market_seed{seed}.csv", MARKET_COLUMNS, rows))
    return files


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep-bids": cmd_sweep_bids,
    "bench-competitive": cmd_bench_competitive,
    "eval-robustness": cmd_eval_robustness,
    "market": cmd_market,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="fedmarket", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="scenario file or bundled scenario name")
        p.add_argument("--seed", type=int, default=None, help="run this seed instead of experiment.seeds")
        p.add_argument("--out", type=Path, default=None, help="output directory (default experiment.output_dir)")
        p.add_argument("--parallel", type=int, default=1, metavar="N")
    return parser


def _configure_logging():
    level = os.environ.get("FEDMARKET_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise InvalidConfigError("seed must be an unsigned 64-bit integer", "--seed")
        if args.parallel < 1:
            raise InvalidConfigError("must be >= 1", "--parallel")
        cfg = load_config(args.config)
        seeds = [args.seed] if args.seed is not None else list(cfg.experiment.seeds)
        out_dir = args.out if args.out is not None else Path(cfg.experiment.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        files = COMMANDS[args.command](cfg, seeds, out_dir, args.parallel)
        write_manifest(out_dir, args.command, cfg.scenario_hash(), files)
        for f in files:
            logger.info("wrote %s", f)
        return EXIT_OK
    except (InvalidConfigError, InvalidInputError, InvalidInstanceError) as exc:
        print(f"fedmarket: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"fedmarket: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except FedMarketError as exc:
        print(f"fedmarket: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
