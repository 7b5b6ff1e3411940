"""
Output files for simulation runs: CSV tables and a plain-text summary report.
"""
import logging
from datetime import datetime
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
import pandas as pd

from src.scenario import save_scenario
from utils.constants import (
    COMPARISON_FILE,
    DAYS_FILE,
    DISTRIBUTIONS_FILE,
    DRIVERS_FILE,
    FARES_FILE,
    RELATIVE_FILE,
    RIDES_FILE,
    SUMMARY_FILE,
    SUMMARY_TEXT_FILE,
)

logger = logging.getLogger(__name__)

RESOLVED_SCENARIO_FILE = 'scenario.yaml'


def _write_csv(frame: pd.DataFrame, out_dir: Union[str, Path], name: str, index: bool = False) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    frame.to_csv(path, index=index)
    return path


def write_days(days: pd.DataFrame, out_dir: Union[str, Path]) -> Path:
    """One row per platform and day"""
    return _write_csv(days, out_dir, DAYS_FILE)


class RunReport:
    """Plain-text steady-state report for one run"""

    def __init__(self, result):
        self.result = result
        self.config = result.config

    def _header(self, f):
        f.write("=" * 80 + "\n")
        f.write(f"RIDE-SOURCING MARKET SIMULATION: {self.config.name.upper()}\n")
        f.write("=" * 80 + "\n")
        f.write(f"\nGenerated: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}\n")
        if self.config.description:
            f.write(f"{self.config.description}\n")
        f.write("\n")

    def _setup(self, f):
        cfg = self.config
        f.write("SETUP\n")
        f.write("-" * 80 + "\n")
        f.write(f"Travelers / drivers: {cfg.travelers} / {cfg.drivers}\n")
        f.write(f"Horizon: {cfg.horizon_days} days, seed {cfg.seed}\n")
        if cfg.min_wage is None:
            f.write("Regulation: none\n")
        else:
            f.write(f"Regulation: minimum wage {cfg.min_wage:.2f} EUR/h "
                    f"(reservation wage {cfg.reservation_wage_eur_per_h:.2f} EUR/h)\n")
        f.write(f"Lockout: {'on' if cfg.lockout_active else 'off'}\n")
        f.write(f"Commission: {cfg.commission:.0%}, fixed cost {cfg.fixed_cost_eur:.0f} EUR/day\n")
        f.write("\n")

    def _game(self, f):
        turns = self.result.turns
        f.write("PRICING GAME\n")
        f.write("-" * 80 + "\n")
        f.write(f"Turns played: {len(turns)}\n")
        if self.result.equilibrium_day is not None:
            f.write(f"Equilibrium reached on day {self.result.equilibrium_day}\n")
        else:
            f.write("No equilibrium reached\n")
        if turns:
            final = turns[-1].fares_after
            f.write("Final fares: " + ", ".join(f"platform {p} {fare:.2f} EUR/km"
                                                 for p, fare in enumerate(final)) + "\n")
            mismatched = sum(1 for t in turns if not t.consistent)
            f.write(f"Turns where realized profit differed from prediction: {mismatched}\n")
        f.write("\n")

    def _steady_state(self, f):
        summary = self.result.summary
        if summary is None:
            f.write("No days simulated; no steady-state summary\n")
            return
        f.write(f"STEADY STATE (final {summary.window} days)\n")
        f.write("-" * 80 + "\n")
        for row in summary.table.itertuples(index=False):
            label = "Market" if row.platform == 'market' else f"Platform {row.platform}"
            f.write(f"\n{label}\n")
            f.write(f"  Fare: {row.fare:.2f} EUR/km\n")
            f.write(f"  Active drivers: {row.active_drivers:.1f} "
                    f"(locked out {row.locked_out_drivers:.1f})\n")
            f.write(f"  Travelers: {row.travelers:.1f}, served {row.served:.1f}, "
                    f"unserved {row.unserved:.1f}\n")
            f.write(f"  Mean wait: {row.mean_wait_s / 60:.1f} min\n")
            f.write(f"  Mean driver income: {row.mean_hourly_income:.2f} EUR/h\n")
            f.write(f"  Revenue / subsidy / profit: {row.revenue:.0f} / {row.subsidy:.0f} / "
                    f"{row.profit:.0f} EUR/day\n")
            f.write(f"  Accumulated capital: {row.accumulated_capital:.0f} EUR\n")

        dist = summary.distributions
        if len(dist):
            f.write("\nDISTRIBUTIONS\n")
            f.write("-" * 80 + "\n")
            for kind, values in dist.groupby('kind')['value']:
                q = np.percentile(values, [10, 50, 90])
                f.write(f"{kind}: n={len(values)}, p10 {q[0]:.2f}, median {q[1]:.2f}, p90 {q[2]:.2f}\n")

    def write(self, out_dir: Union[str, Path]) -> Path:
        path = Path(out_dir) / SUMMARY_TEXT_FILE
        with open(path, 'w', encoding='utf-8') as f:
            self._header(f)
            self._setup(f)
            self._game(f)
            self._steady_state(f)
        return path


def write_run_outputs(result, out_dir: Union[str, Path]) -> Dict[str, Path]:
    """
    Write every output of a run.

    Returns:
        File paths keyed by short name
    """
    out_dir = Path(out_dir)
    files = {
        'days': write_days(result.days, out_dir),
        'fares': _write_csv(result.fares, out_dir, FARES_FILE),
        'scenario': save_scenario(result.config, out_dir / RESOLVED_SCENARIO_FILE),
    }
    if result.summary is not None:
        files['summary'] = _write_csv(result.summary.table, out_dir, SUMMARY_FILE)
        files['distributions'] = _write_csv(result.summary.distributions, out_dir, DISTRIBUTIONS_FILE)
    if result.rides is not None:
        files['rides'] = _write_csv(result.rides, out_dir, RIDES_FILE)
    if result.drivers is not None:
        files['drivers'] = _write_csv(result.drivers, out_dir, DRIVERS_FILE)
    files['summary_text'] = RunReport(result).write(out_dir)
    logger.info("Wrote %d files to %s", len(files), out_dir)
    return files


def write_summary(table: pd.DataFrame, out_dir: Union[str, Path],
                  distributions: Optional[pd.DataFrame] = None) -> Dict[str, Path]:
    files = {'summary': _write_csv(table, out_dir, SUMMARY_FILE)}
    if distributions is not None:
        files['distributions'] = _write_csv(distributions, out_dir, DISTRIBUTIONS_FILE)
    return files


def write_comparison(comparison: pd.DataFrame, relative: pd.DataFrame,
                     out_dir: Union[str, Path]) -> Dict[str, Path]:
    """Scenario comparison (metrics x scenarios) and percent change against the baseline"""
    files = {'comparison': _write_csv(comparison, out_dir, COMPARISON_FILE, index=True)}
    if len(relative):
        files['relative'] = _write_csv(relative, out_dir, RELATIVE_FILE, index=True)
    return files
