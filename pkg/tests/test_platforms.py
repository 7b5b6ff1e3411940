import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from src.exceptions import SimulationInputError
from src.platforms import (
    ParticipationHistory,
    PlatformState,
    RegulationPolicy,
    lockout_cap,
    lockout_select,
    settle_day,
)
from src.withinday import DayOutcome, DriverShiftState, RideRecord
from utils.constants import MONEY_TOLERANCE_EUR


def ride(traveler, driver_id, fare, platform=0):
    return RideRecord(traveler_id=traveler, driver_id=driver_id, platform=platform, request_time=0,
                      dispatch_time=0, pickup_time=10, dropoff_time=100, wait_time=10,
                      in_vehicle_time=90, distance_m=1000.0, fare=fare)


def outcome_from(driver_fares, platform=0):
    """One ride per (driver, fare) pair"""
    rides, drivers = [], []
    traveler = 0
    for driver_id, fares in driver_fares.items():
        for fare in fares:
            rides.append(ride(traveler, driver_id, fare, platform))
            traveler += 1
        drivers.append(DriverShiftState(driver_id=driver_id, platform=platform, position=0,
                                        fares_today=sum(fares)))
    return DayOutcome(rides=rides, drivers=drivers, platform_fares={platform: sum(r.fare for r in rides)})


def test_no_regulation_means_no_subsidy():
    outcome = outcome_from({0: [1.0], 1: []})
    settlement = settle_day(outcome, RegulationPolicy(), PlatformState(id=0, fare=1.4))
    assert settlement.ledger.subsidy == 0.0
    assert all(d.subsidy == 0.0 for d in settlement.drivers)


def test_shortfall_is_topped_up():
    # 50 EUR gross, 20 % commission leaves 40 EUR; floor is 12 * 4 = 48
    outcome = outcome_from({0: [50.0]})
    settlement = settle_day(outcome, RegulationPolicy(min_wage=12.0, shift_hours=4.0),
                            PlatformState(id=0, fare=1.4, commission=0.2))
    driver, = settlement.drivers
    assert driver.earned == pytest.approx(40.0)
    assert driver.subsidy == pytest.approx(8.0)
    assert driver.realized_income == pytest.approx(48.0)
    assert driver.realized_hourly == 12.0


def test_daily_profit():
    # Fares total 1000; two idle drivers get the 50 EUR floor each
    outcome = outcome_from({0: [500.0, 500.0], 1: [], 2: []})
    state = PlatformState(id=0, fare=1.4, commission=0.2, fixed_cost=500.0)
    settlement = settle_day(outcome, RegulationPolicy(min_wage=12.5, shift_hours=4.0), state)
    ledger = settlement.ledger
    assert ledger.fares_total == pytest.approx(1000.0)
    assert ledger.revenue == pytest.approx(200.0)
    assert ledger.subsidy == pytest.approx(100.0)
    assert ledger.profit == pytest.approx(-400.0)
    assert settlement.state.accumulated_capital == pytest.approx(-400.0)


def test_foreign_ride_rejected():
    outcome = outcome_from({0: [10.0]}, platform=1)
    with pytest.raises(SimulationInputError):
        settle_day(outcome, RegulationPolicy(), PlatformState(id=0, fare=1.0))


def test_policy_rejects_non_positive_wage():
    with pytest.raises(SimulationInputError):
        RegulationPolicy(min_wage=0.0)


fare_lists = st.dictionaries(st.integers(0, 20), st.lists(st.floats(0, 80), max_size=6), max_size=8)


@settings(deadline=None, max_examples=200)
@given(driver_fares=fare_lists, wage=st.one_of(st.none(), st.floats(0.5, 30)),
       gamma=st.floats(0, 1))
def test_money_is_conserved(driver_fares, wage, gamma):
    outcome = outcome_from(driver_fares)
    settlement = settle_day(outcome, RegulationPolicy(min_wage=wage),
                            PlatformState(id=0, fare=1.0, commission=gamma))
    ledger = settlement.ledger
    paid = sum(r.fare for r in outcome.rides)
    assert abs(paid - (ledger.driver_gross + ledger.revenue)) <= MONEY_TOLERANCE_EUR * max(1.0, paid)
    realized = sum(d.realized_income for d in settlement.drivers)
    assert abs(realized - (ledger.driver_gross + ledger.subsidy)) <= MONEY_TOLERANCE_EUR * max(1.0, realized)
    assert ledger.profit == ledger.revenue - ledger.subsidy - ledger.fixed_cost
    if wage is not None:
        assert all(d.realized_hourly >= wage for d in settlement.drivers)


@settings(deadline=None, max_examples=100)
@given(driver_fares=fare_lists, low=st.floats(0.5, 20), extra=st.floats(0, 10))
def test_higher_wage_never_lowers_subsidy(driver_fares, low, extra):
    outcome = outcome_from(driver_fares)
    state = PlatformState(id=0, fare=1.0)
    a = settle_day(outcome, RegulationPolicy(min_wage=low), state).ledger.subsidy
    b = settle_day(outcome, RegulationPolicy(min_wage=low + extra), state).ledger.subsidy
    assert b >= a - 1e-9


def test_capital_telescopes():
    state = PlatformState(id=0, fare=1.0)
    profits = []
    for day in range(10):
        settlement = settle_day(outcome_from({0: [day * 30.0]}), RegulationPolicy(min_wage=10.0), state)
        profits.append(settlement.ledger.profit)
        state = settlement.state
    assert state.accumulated_capital == pytest.approx(sum(profits), abs=1e-9)


# ============================================================================
# LOCKOUT
# ============================================================================

def test_hundred_travelers_keep_ten_most_loyal():
    candidates = list(range(20))
    loyalty = {d: d / 20 for d in candidates}
    active = lockout_select(candidates, 100, loyalty)
    assert active == list(range(19, 9, -1))


def test_no_travelers_no_drivers():
    assert lockout_select([1, 2, 3], 0, {}) == []


def test_cap_rounds_up_and_ties_go_to_lower_id():
    loyalty = {4: 0.5, 7: 0.5, 2: 0.1, 9: 0.5, 1: 0.0}
    assert lockout_select([9, 7, 4, 2, 1], 25, loyalty) == [4, 7, 9]


def test_cap_above_candidates_keeps_everyone():
    assert sorted(lockout_select([3, 1], 500, {})) == [1, 3]


@given(expected=st.integers(0, 10_000), ratio=st.integers(1, 50))
def test_cap_formula(expected, ratio):
    cap = lockout_cap(expected, ratio)
    assert (cap - 1) * ratio < expected <= cap * ratio or (expected == 0 and cap == 0)


def test_participation_rates_over_trailing_window():
    history = ParticipationHistory(drivers=3, window=4)
    for worked in ([0, 1, -1], [0, 1, 0], [0, -1, 0], [1, -1, 0], [0, 0, 0]):
        history.record(np.array(worked))
    # The first day has dropped out of the window
    np.testing.assert_allclose(history.rates(0), [0.75, 0.25, 1.0])
    np.testing.assert_allclose(history.rates(1), [0.25, 0.25, 0.0])


def test_history_copy_is_independent():
    history = ParticipationHistory(drivers=2, window=2)
    clone = history.copy()
    clone.record(np.array([0, 0]))
    assert history.rates(0).tolist() == [0.0, 0.0]
