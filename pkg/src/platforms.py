"""
Platform economics: daily settlement under minimum-wage regulation and the
loyalty-ranked lockout strategy.
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import List, Mapping, Optional, Sequence

import numpy as np

from src.exceptions import SimulationInputError
from src.withinday import DayOutcome
from utils.constants import COMMISSION_RATE, FIXED_COST_EUR_PER_DAY, SHIFT_HOURS

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RegulationPolicy:
    """Guaranteed hourly income for active drivers; absent means unregulated"""
    min_wage: Optional[float] = None
    shift_hours: float = SHIFT_HOURS

    def __post_init__(self):
        if self.min_wage is not None and not self.min_wage > 0:
            raise SimulationInputError(f"minimum wage must be positive, got {self.min_wage}")
        if not self.shift_hours > 0:
            raise SimulationInputError(f"shift hours must be positive, got {self.shift_hours}")

    @property
    def regulated(self) -> bool:
        return self.min_wage is not None

    @property
    def daily_floor(self) -> float:
        """Guaranteed income for one shift (EUR)"""
        return self.min_wage * self.shift_hours if self.regulated else 0.0


@dataclass(frozen=True)
class PlatformState:
    id: int
    fare: float
    commission: float = COMMISSION_RATE
    fixed_cost: float = FIXED_COST_EUR_PER_DAY
    lockout_enabled: bool = False
    accumulated_capital: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.commission <= 1.0:
            raise SimulationInputError(f"commission must lie in [0, 1], got {self.commission}")
        if self.fare < 0:
            raise SimulationInputError(f"fare must be non-negative, got {self.fare}")


@dataclass(frozen=True)
class DailyLedger:
    platform: int
    revenue: float
    subsidy: float
    fixed_cost: float
    profit: float
    rides_count: int
    fares_total: float
    driver_gross: float


@dataclass(frozen=True)
class DriverSettlement:
    driver_id: int
    platform: int
    rides: int
    gross_fares: float
    earned: float
    subsidy: float
    realized_income: float
    realized_hourly: float
    busy_time: int


@dataclass(frozen=True)
class Settlement:
    ledger: DailyLedger
    drivers: List[DriverSettlement]
    state: PlatformState


def settle_day(outcome: DayOutcome, policy: RegulationPolicy, state: PlatformState) -> Settlement:
    """
    Close the books for one platform and day.

    Revenue is the commission on every fare. Each active driver keeps
    (1 - commission) of their fares; under regulation the platform tops
    that up to min_wage * shift_hours. Profit is revenue minus subsidy minus
    the fixed daily cost and is added to the accumulated capital.

    Args:
        outcome: Day outcome restricted to this platform
        policy: Minimum-wage regulation
        state: Platform before settlement

    Returns:
        Settlement with the ledger, per-driver incomes and the updated state
    """
    for ride in outcome.rides:
        if ride.platform != state.id:
            raise SimulationInputError(f"ride of traveler {ride.traveler_id} belongs to platform {ride.platform}")
    for driver in outcome.drivers:
        if driver.platform != state.id:
            raise SimulationInputError(f"driver {driver.driver_id} works for platform {driver.platform}")

    gamma = state.commission
    fares_total = math.fsum(r.fare for r in outcome.rides)
    rides_per_driver = {}
    for ride in outcome.rides:
        rides_per_driver[ride.driver_id] = rides_per_driver.get(ride.driver_id, 0) + 1

    floor = policy.daily_floor
    drivers = []
    for driver in outcome.drivers:
        earned = (1.0 - gamma) * driver.fares_today
        if policy.regulated:
            subsidy = max(0.0, floor - earned)
            realized = max(earned, floor)
            hourly = max(earned / policy.shift_hours, policy.min_wage)
        else:
            subsidy = 0.0
            realized = earned
            hourly = earned / policy.shift_hours
        drivers.append(DriverSettlement(
            driver_id=driver.driver_id,
            platform=state.id,
            rides=rides_per_driver.get(driver.driver_id, 0),
            gross_fares=driver.fares_today,
            earned=earned,
            subsidy=subsidy,
            realized_income=realized,
            realized_hourly=hourly,
            busy_time=driver.busy_time,
        ))

    revenue = gamma * fares_total
    subsidy_total = math.fsum(d.subsidy for d in drivers)
    profit = revenue - subsidy_total - state.fixed_cost
    ledger = DailyLedger(
        platform=state.id,
        revenue=revenue,
        subsidy=subsidy_total,
        fixed_cost=state.fixed_cost,
        profit=profit,
        rides_count=len(outcome.rides),
        fares_total=fares_total,
        driver_gross=math.fsum(d.earned for d in drivers),
    )
    return Settlement(
        ledger=ledger,
        drivers=drivers,
        state=replace(state, accumulated_capital=state.accumulated_capital + profit),
    )


# ============================================================================
# LOCKOUT
# ============================================================================

class ParticipationHistory:
    """
    Which platform each driver actually worked for over the last `window`
    days (-1 for days off or locked out).
    """

    def __init__(self, drivers: int, window: int = 20):
        if window < 1:
            raise SimulationInputError(f"loyalty window must be at least one day, got {window}")
        self.window = window
        self._worked = np.full((window, drivers), -1, dtype=int)
        self._cursor = 0

    def record(self, worked_platform: np.ndarray) -> None:
        """Append one day; worked_platform[d] is the platform or -1"""
        self._worked[self._cursor % self.window] = worked_platform
        self._cursor += 1

    def rates(self, platform: int) -> np.ndarray:
        """Participation rate per driver: worked days / window"""
        return (self._worked == platform).sum(axis=0) / self.window

    def copy(self) -> "ParticipationHistory":
        clone = ParticipationHistory.__new__(ParticipationHistory)
        clone.window = self.window
        clone._worked = self._worked.copy()
        clone._cursor = self._cursor
        return clone


def lockout_cap(expected_travelers: int, driver_traveler_ratio: int = 10) -> int:
    """One active driver per `driver_traveler_ratio` travelers, rounded up"""
    if expected_travelers < 0:
        raise SimulationInputError(f"expected travelers must be non-negative, got {expected_travelers}")
    if driver_traveler_ratio < 1:
        raise SimulationInputError(f"driver/traveler ratio must be at least 1, got {driver_traveler_ratio}")
    return -(-int(expected_travelers) // int(driver_traveler_ratio))


def lockout_select(candidates: Sequence[int], expected_travelers: int,
                   participation_history: Mapping[int, float],
                   driver_traveler_ratio: int = 10) -> List[int]:
    """
    Keep the most loyal drivers, up to the cap.

    Args:
        candidates: Ids of drivers who chose the platform today
        expected_travelers: Traveler count the cap is based on
        participation_history: Participation rate per driver id
        driver_traveler_ratio: Travelers per active driver

    Returns:
        Active driver ids, most loyal first; ties go to the lower id
    """
    cap = lockout_cap(expected_travelers, driver_traveler_ratio)
    ranked = sorted(candidates, key=lambda d: (-participation_history.get(d, 0.0), d))
    return ranked[:cap]
