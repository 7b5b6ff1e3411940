"""
Ride-Sourcing Market Simulator - command-line entry point
Two platforms competing for travelers and drivers, under optional
minimum-wage regulation, with a turn-based pricing game

Usage:
    python app.py run data/scenarios/moderate_lockout.yaml --seed 7 --out output/mod
    python app.py sweep data/scenarios --seeds 5
    python app.py summarize output/mod/days.csv --window 50
    python app.py validate data/scenarios/strong_no_lockout.yaml
    python app.py generate --rows 5 --cols 5 --travelers 200
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import pandas as pd

import config
from generate_synthetic_inputs import build_parser as build_generate_parser
from generate_synthetic_inputs import generate_from_args
from src.exceptions import SimulationError
from src.experiment import run_scenario, summarize, sweep
from src.report_generator import write_summary
from src.scenario import load_scenario
from src.world import load_inputs
from utils.constants import DRIVERS_FILE, RIDES_FILE


def banner(title: str):
    print("\n" + "=" * 80)
    print(title)
    print("=" * 80)


# ────────────────────────────────────────────────
# Commands
# ────────────────────────────────────────────────

def cmd_run(args: argparse.Namespace) -> int:
    banner("RIDE-SOURCING MARKET SIMULATION")
    scenario = load_scenario(args.scenario)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.days is not None:
        overrides["horizon_days"] = args.days
    if args.workers is not None:
        overrides["rollout_workers"] = args.workers
    if overrides:
        scenario = scenario.with_overrides(**overrides)
    print(f"✓ Loaded scenario {scenario.name} ({scenario.horizon_days} days, seed {scenario.seed})")

    out_dir = Path(args.out) if args.out else config.OUTPUT_DIR / scenario.name
    result = run_scenario(scenario, out_dir, progress=not args.quiet, raw_logs=args.raw_logs)
    print(f"✓ Simulated {scenario.horizon_days} days, {len(result.turns)} pricing turns")
    if result.equilibrium_day is not None:
        print(f"✓ Fare equilibrium from day {result.equilibrium_day}")

    banner("OUTPUTS")
    for name, path in result.files.items():
        print(f"   ✓ {name}: {path}")
    if result.summary is not None:
        print()
        print(result.summary.table.to_string(index=False, float_format=lambda v: f"{v:.2f}"))
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    banner(f"SCENARIO SWEEP: {args.directory}")
    out_dir = Path(args.out) if args.out else config.OUTPUT_DIR / "sweep"
    tables = sweep(args.directory, out_dir, seeds=args.seeds, progress=not args.quiet,
                   raw_logs=args.raw_logs)
    print(f"✓ Results in {out_dir}")
    print()
    print(tables["comparison"].to_string(float_format=lambda v: f"{v:.2f}"))
    if len(tables["relative"]):
        banner("PERCENT CHANGE AGAINST NO REGULATION")
        print(tables["relative"].to_string(float_format=lambda v: f"{v:+.1f}%"))
    return 0


def cmd_summarize(args: argparse.Namespace) -> int:
    days_path = Path(args.days_csv)
    try:
        days = pd.read_csv(days_path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise SimulationError(f"cannot read {days_path}: {e}") from e
    rides_path = days_path.parent / RIDES_FILE
    drivers_path = days_path.parent / DRIVERS_FILE
    rides = pd.read_csv(rides_path) if rides_path.exists() else None
    drivers = pd.read_csv(drivers_path) if drivers_path.exists() else None

    summary = summarize(days, args.window, rides, drivers)
    out_dir = Path(args.out) if args.out else days_path.parent
    files = write_summary(summary.table, out_dir, summary.distributions)
    banner(f"STEADY STATE (final {args.window} days)")
    print(summary.table.to_string(index=False, float_format=lambda v: f"{v:.2f}"))
    for name, path in files.items():
        print(f"   ✓ {name}: {path}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    network, patterns = load_inputs(scenario)
    travelers = patterns.size if patterns is not None else scenario.travelers
    print(f"✓ {args.scenario}: valid ({network.num_nodes} nodes, {travelers} travelers, "
          f"{scenario.drivers} drivers)")
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    banner("SYNTHETIC INPUTS")
    generate_from_args(args)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ridesim", description=__doc__.splitlines()[1])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one scenario")
    run.add_argument("scenario")
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.add_argument("--days", type=int, help="override horizon_days")
    run.add_argument("--workers", type=int, help="processes for pricing-game rollouts")
    run.add_argument("--raw-logs", action="store_true", help="also write rides.csv and drivers.csv")
    run.add_argument("--quiet", action="store_true", help="no progress bar")
    run.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", help="run every scenario in a directory")
    sw.add_argument("directory")
    sw.add_argument("--seeds", type=int, default=1)
    sw.add_argument("--out")
    sw.add_argument("--raw-logs", action="store_true")
    sw.add_argument("--quiet", action="store_true")
    sw.set_defaults(func=cmd_sweep)

    sm = sub.add_parser("summarize", help="steady-state summary of a days.csv")
    sm.add_argument("days_csv")
    sm.add_argument("--window", type=int, default=config.OUTPUT_CONFIG["summary_window_days"])
    sm.add_argument("--out")
    sm.set_defaults(func=cmd_summarize)

    va = sub.add_parser("validate", help="check a scenario file and its inputs")
    va.add_argument("scenario")
    va.set_defaults(func=cmd_validate)

    gen = build_generate_parser(sub.add_parser("generate", help="write a synthetic network and demand file"))
    gen.set_defaults(func=cmd_generate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=config.LOG_LEVEL,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SimulationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
