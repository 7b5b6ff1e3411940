"""
Experiment orchestration: the day loop with its pricing game, steady-state
summaries, and multi-scenario sweeps.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from src.demand import synth_demand
from src.exceptions import SimulationInputError
from src.game import GameSchedule, TurnRecord, play_turn
from src.report_generator import write_comparison, write_days, write_run_outputs
from src.scenario import ScenarioConfig, load_scenario
from src.world import (
    DAY_RECORD_COLUMNS,
    DRIVER_LOG_COLUMNS,
    RIDE_LOG_COLUMNS,
    WorldState,
)

logger = logging.getLogger(__name__)

# Summed over platforms in the market row
COUNT_METRICS = ['candidate_drivers', 'active_drivers', 'locked_out_drivers',
                 'travelers', 'served', 'unserved', 'aware_travelers', 'aware_drivers']
# Averaged over platforms in the market row
MONEY_METRICS = ['fare', 'fares_total', 'revenue', 'subsidy', 'fixed_cost', 'profit',
                 'accumulated_capital']
SUMMARY_METRICS = ['fare', 'active_drivers', 'candidate_drivers', 'locked_out_drivers',
                   'travelers', 'served', 'unserved', 'mean_wait_s', 'mean_hourly_income',
                   'fares_total', 'revenue', 'subsidy', 'fixed_cost', 'profit',
                   'accumulated_capital', 'aware_travelers', 'aware_drivers']
MARKET = 'market'

# Axes of the relative-to-baseline comparison
RELATIVE_METRICS = ['mean_hourly_income', 'active_drivers', 'mean_wait_s', 'profit']
BASELINE_SCENARIO = 'no_regulation'

FARE_COLUMNS = ['turn', 'day', 'mover', 'days', 'previous_fare', 'committed_fare', 'move',
                'utility_down', 'utility_stay', 'utility_up', 'predicted_utility',
                'realized_utility', 'fare_difference']

__all__ = ['run_scenario', 'synth_demand', 'summarize', 'sweep', 'ScenarioResult', 'SteadyStateSummary']


@dataclass
class SteadyStateSummary:
    """
    Attributes:
        table: One row per platform plus a market row, metric means over the window
        distributions: Per-driver hourly income and per-traveler wait rows over the window
        window: Days averaged
    """
    table: pd.DataFrame
    distributions: pd.DataFrame
    window: int


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    days: pd.DataFrame
    fares: pd.DataFrame
    summary: Optional[SteadyStateSummary]
    rides: Optional[pd.DataFrame] = None
    drivers: Optional[pd.DataFrame] = None
    turns: List[TurnRecord] = field(default_factory=list)
    equilibrium_day: Optional[int] = None
    files: Dict[str, Path] = field(default_factory=dict)


def _frame(rows: List[dict], columns: List[str]) -> pd.DataFrame:
    return pd.DataFrame(rows, columns=columns)


def run_scenario(config: ScenarioConfig, out_dir: Optional[Union[str, Path]] = None,
                 progress: bool = True, raw_logs: bool = False) -> ScenarioResult:
    """
    Simulate a scenario day by day and play the pricing game at turn boundaries.

    Args:
        config: Validated scenario
        out_dir: Write days.csv, summary.csv, distributions.csv, fares.csv and
            summary.txt here; nothing is written when None
        progress: Show a tqdm progress bar
        raw_logs: Also keep (and write) every ride and driver row

    Returns:
        ScenarioResult with the DayRecord series and steady-state summary

    Raises:
        SimulationError: on a mid-run failure, after flushing days.csv for
            the completed days
    """
    horizon = config.horizon_days
    window = min(config.summary_window_days, horizon)
    log_from = 0 if raw_logs else max(0, horizon - window)
    world = WorldState.build(config, log_from_day=log_from)
    schedule = GameSchedule(
        turnover_interval=config.turnover_days,
        first_turn_day=config.first_turn,
        stay_turns=config.equilibrium_stay_turns,
        freeze_on_equilibrium=config.freeze_on_equilibrium,
    )
    grid = config.fare_grid
    equilibrium_day = None

    bar = tqdm(total=horizon, desc=config.name, unit="day", disable=not progress, leave=False)
    try:
        while world.day < horizon:
            if schedule.turn_due(world.day):
                days = min(config.turnover_days, horizon - world.day)
                turn = play_turn(world, schedule.current_mover, grid, days,
                                 workers=config.rollout_workers, turn=len(schedule.turns))
                if schedule.record(turn) and equilibrium_day is None:
                    equilibrium_day = world.day
                    logger.info("Equilibrium at day %d, fares %s", world.day, world.fares())
                bar.update(days)
            else:
                world.step()
                bar.update(1)
    except Exception:
        if out_dir is not None:
            path = write_days(_frame(world.records, DAY_RECORD_COLUMNS), out_dir)
            logger.error("Run aborted on day %d; completed days flushed to %s", world.day, path)
        raise
    finally:
        bar.close()

    days_frame = _frame(world.records, DAY_RECORD_COLUMNS)
    rides = _frame(world.ride_log, RIDE_LOG_COLUMNS)
    drivers = _frame(world.driver_log, DRIVER_LOG_COLUMNS)
    summary = summarize(days_frame, window, rides, drivers) if window > 0 else None

    result = ScenarioResult(
        config=config,
        days=days_frame,
        fares=_frame([t.to_row() for t in schedule.turns], FARE_COLUMNS),
        summary=summary,
        rides=rides if raw_logs else None,
        drivers=drivers if raw_logs else None,
        turns=list(schedule.turns),
        equilibrium_day=equilibrium_day,
    )
    if out_dir is not None:
        result.files = write_run_outputs(result, out_dir)
    return result


# ============================================================================
# STEADY STATE
# ============================================================================

def _market_day(group: pd.DataFrame) -> pd.Series:
    """Both platforms folded into one market row for a single day"""
    row = {m: group[m].sum() for m in COUNT_METRICS}
    row.update({m: group[m].mean() for m in MONEY_METRICS})
    served = group['served'].sum()
    active = group['active_drivers'].sum()
    row['mean_wait_s'] = ((group['mean_wait_s'] * group['served']).sum() / served
                          if served else np.nan)
    row['mean_hourly_income'] = ((group['mean_hourly_income'] * group['active_drivers']).sum() / active
                                 if active else np.nan)
    return pd.Series(row)


def summarize(series: pd.DataFrame, window: int, rides: Optional[pd.DataFrame] = None,
              drivers: Optional[pd.DataFrame] = None) -> SteadyStateSummary:
    """
    Average the final `window` days.

    Args:
        series: DayRecord rows (days.csv)
        window: Days at the end of the series to average
        rides: Optional ride log for the wait distribution
        drivers: Optional driver log for the income distribution

    Returns:
        SteadyStateSummary with platform and market rows
    """
    if window < 1:
        raise SimulationInputError(f"summary window must be at least one day, got {window}")
    days = np.sort(series['day'].unique()) if len(series) else np.array([], dtype=int)
    if window > len(days):
        raise SimulationInputError(f"summary window {window} exceeds the {len(days)} simulated days")
    first_day = days[-window]
    tail = series[series['day'] >= first_day]

    per_platform = tail.groupby('platform')[SUMMARY_METRICS].mean()
    per_platform.index = per_platform.index.map(str)
    inputs = list(dict.fromkeys(COUNT_METRICS + MONEY_METRICS + [
        'served', 'active_drivers', 'mean_wait_s', 'mean_hourly_income']))
    market = tail.groupby('day')[inputs].apply(_market_day)
    table = pd.concat([per_platform, market[SUMMARY_METRICS].mean().to_frame(MARKET).T])
    table.index.name = 'platform'
    table.insert(0, 'window_days', window)

    parts = []
    if drivers is not None and len(drivers):
        worked = drivers[(drivers['day'] >= first_day) & drivers['active']]
        parts.append(pd.DataFrame({
            'kind': 'driver_hourly_income',
            'day': worked['day'],
            'platform': worked['platform'],
            'agent_id': worked['driver_id'],
            'value': worked['realized_hourly'],
        }))
    if rides is not None and len(rides):
        served = rides[(rides['day'] >= first_day) & rides['served'].astype(bool)]
        parts.append(pd.DataFrame({
            'kind': 'traveler_wait_s',
            'day': served['day'],
            'platform': served['platform'],
            'agent_id': served['traveler_id'],
            'value': served['wait_s'],
        }))
    distributions = (pd.concat(parts, ignore_index=True) if parts
                     else pd.DataFrame(columns=['kind', 'day', 'platform', 'agent_id', 'value']))
    return SteadyStateSummary(table=table.reset_index(), distributions=distributions, window=window)


# ============================================================================
# SWEEPS
# ============================================================================

def sweep(scenario_dir: Union[str, Path], out_dir: Union[str, Path], seeds: int = 1,
          progress: bool = True, raw_logs: bool = False,
          scenarios: Optional[Sequence[ScenarioConfig]] = None) -> Dict[str, pd.DataFrame]:
    """
    Run every scenario in a directory for `seeds` consecutive seeds.

    Each run writes to out_dir/<scenario>/seed_<n>/. The market rows are
    averaged over seeds into comparison.csv (metrics x scenarios) and
    compared with the no-regulation scenario in relative_to_baseline.csv.

    Returns:
        {'comparison': DataFrame, 'relative': DataFrame or empty}
    """
    if seeds < 1:
        raise SimulationInputError(f"seeds must be at least 1, got {seeds}")
    if scenarios is None:
        files = sorted(Path(scenario_dir).glob("*.yaml")) + sorted(Path(scenario_dir).glob("*.yml"))
        if not files:
            raise SimulationInputError(f"no scenario files in {scenario_dir}")
        scenarios = [load_scenario(f) for f in files]

    out_dir = Path(out_dir)
    market_rows = {}
    for config in scenarios:
        rows = []
        for k in range(seeds):
            seeded = config.with_overrides(seed=config.seed + k)
            result = run_scenario(seeded, out_dir / config.name / f"seed_{seeded.seed}",
                                  progress=progress, raw_logs=raw_logs)
            if result.summary is None:
                continue
            table = result.summary.table.set_index('platform')
            rows.append(table.loc[MARKET, SUMMARY_METRICS])
        if rows:
            market_rows[config.name] = pd.concat(rows, axis=1).mean(axis=1)
        logger.info("Scenario %s done (%d seeds)", config.name, seeds)

    comparison = pd.DataFrame(market_rows)
    comparison.index.name = 'metric'
    relative = relative_to_baseline(comparison)
    write_comparison(comparison, relative, out_dir)
    return {'comparison': comparison, 'relative': relative}


def relative_to_baseline(comparison: pd.DataFrame, baseline: str = BASELINE_SCENARIO) -> pd.DataFrame:
    """Percent change of each scenario against the baseline on the headline metrics"""
    if baseline not in comparison.columns:
        logger.warning("No '%s' scenario in the sweep; skipping the baseline comparison", baseline)
        return pd.DataFrame()
    base = comparison.loc[RELATIVE_METRICS, baseline]
    others = comparison.drop(columns=[baseline]).loc[RELATIVE_METRICS]
    relative = others.sub(base, axis=0).div(base.abs().replace(0, np.nan), axis=0) * 100.0
    relative.index.name = 'metric'
    return relative
