"""Command line entry point: ``bench run``, ``bench stats``, ``bench scenario``."""
from __future__ import annotations

import argparse
import logging
import sys

from ..planner import PLANNER_IDS
from ..space import SUPPORTED_DIMS, make_scenario
from ..validation import ConfigError, InvalidInputError
from .campaign import CampaignSpec, run_campaign
from .outputs import emit_outputs, read_runs_csv, write_stats_json
from .stats import compute_stats

log = logging.getLogger("mitstar.bench")

SCENARIOS = ("fg", "rr", "dw", "ge")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bench", description="Seeded planner benchmark campaigns.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a campaign and write runs.csv, stats.json, events.json and plots")
    run.add_argument("--scenario", choices=SCENARIOS, help="scenario family")
    run.add_argument("--dim", type=int, nargs="+", default=[2], help="dimension(s) of the state space")
    run.add_argument("--planner", nargs="+", choices=PLANNER_IDS, default=["mitstar"], help="planner variant(s)")
    run.add_argument("--runs", type=int, default=10, help="seeded runs per planner and scenario")
    run.add_argument("--max-time", type=float, default=None, help="budget per run in seconds (default: per-scenario table)")
    run.add_argument("--seed", type=int, default=0, help="base seed")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--workers", type=int, default=None, help="parallel worker processes (default: CPU count)")
    run.add_argument("--scenario-file", default=None, help="scenario JSON to use instead of a generated family")
    run.add_argument("--instances", type=int, default=1, help="random-rectangle instances per dimension")
    run.add_argument("--clock", choices=("work", "wall"), default="work", help="budget clock (work is deterministic)")
    run.add_argument("--stop-on-initial", action="store_true", help="end each run at its first solution")
    run.add_argument("--no-plots", action="store_true", help="skip SVG plots")

    st = sub.add_parser("stats", help="recompute statistics from a runs.csv")
    st.add_argument("--in", dest="inp", required=True, help="runs.csv to read")
    st.add_argument("--out", required=True, help="stats.json to write")
    st.add_argument("--baseline", default="baseline-off", help="planner used as improvement baseline")

    sc = sub.add_parser("scenario", help="export a generated scenario as JSON")
    sc.add_argument("--scenario", choices=SCENARIOS, required=True)
    sc.add_argument("--dim", type=int, choices=SUPPORTED_DIMS, default=2)
    sc.add_argument("--seed", type=int, default=0, help="instance seed (random rectangles)")
    sc.add_argument("--out", required=True, help="JSON file to write")
    return parser


def _cmd_run(args) -> int:
    if args.scenario is None and args.scenario_file is None:
        raise ConfigError("give --scenario or --scenario-file")
    spec = CampaignSpec(
        family=args.scenario or "fg",
        dims=tuple(args.dim),
        planners=tuple(args.planner),
        runs=args.runs,
        max_time=args.max_time,
        base_seed=args.seed,
        instances=args.instances,
        workers=args.workers,
        scenario_file=args.scenario_file,
        clock=args.clock,
        stop_on_initial=args.stop_on_initial,
    ).validate()

    def progress(done, total):
        log.info("run %d/%d", done, total)

    records = run_campaign(spec, progress=progress)
    stats = compute_stats(records)
    for path in emit_outputs(records, stats, args.out, plots=not args.no_plots):
        log.info("wrote %s", path)
    for s in stats.values():
        print(
            f"{s.scenario}-r{s.dim} {s.planner}: success {s.success_rate:.2f} "
            f"t_init {s.median_t_init:.4g} c_init {s.median_c_init:.4g} c_final {s.median_c_final:.4g}"
        )
    return 0


def _cmd_stats(args) -> int:
    records = read_runs_csv(args.inp)
    write_stats_json(compute_stats(records), args.out, baseline=args.baseline)
    return 0


def _cmd_scenario(args) -> int:
    make_scenario(args.scenario.upper(), args.dim, args.seed).save(args.out)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    handlers = {"run": _cmd_run, "stats": _cmd_stats, "scenario": _cmd_scenario}
    try:
        return handlers[args.command](args)
    except (ConfigError, InvalidInputError, OSError, ValueError) as exc:
        print(f"bench: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
