import itertools

import numpy as np
import pytest

from src.exceptions import SimulationInputError
from src.game import (
    FareGrid,
    GameSchedule,
    candidate_moves,
    choose_fare,
    detect_equilibrium,
    evaluate_move,
    play_turn,
)
from src.world import WorldState
from utils.constants import MOVE_DOWN, MOVE_STAY, MOVE_UP

GRID = FareGrid(0.2, 3.0, 0.2)


class PayoffWorld:
    """Stand-in world whose daily profit depends only on the mover's fare"""

    def __init__(self, fares, payoff, day=0):
        self._fares = list(fares)
        self.payoff = payoff
        self.day = day
        self.clones = 0

    def fare(self, platform):
        return self._fares[platform]

    def fares(self):
        return list(self._fares)

    def set_fare(self, platform, fare):
        self._fares[platform] = fare

    def clone(self):
        self.clones += 1
        return PayoffWorld(self._fares, self.payoff, self.day)

    def advance(self, days, platform):
        self.day += days
        return [self.payoff[round(self._fares[platform], 1)]] * days


def payoff_evaluator(snapshot, mover, fare, days):
    return snapshot.payoff[round(fare, 1)] * days


# ============================================================================
# FARE GRID
# ============================================================================

@pytest.mark.parametrize("current, expected", [
    (1.2, [1.0, 1.2, 1.4]),
    (0.2, [0.2, 0.4]),
    (3.0, [2.8, 3.0]),
])
def test_candidates_stay_inside_bounds(current, expected):
    assert candidate_moves(current, GRID) == pytest.approx(expected)


def test_off_grid_fare_rejected():
    with pytest.raises(SimulationInputError):
        candidate_moves(1.3, GRID)


def test_grid_points():
    assert FareGrid(1.0, 2.0, 0.5).points == [1.0, 1.5, 2.0]


@pytest.mark.parametrize("low, high, step", [(1.0, 1.0, 0.2), (0.2, 3.0, 0.0), (0.2, 3.0, 0.3), (-0.2, 1.0, 0.2)])
def test_invalid_grid_rejected(low, high, step):
    with pytest.raises(SimulationInputError):
        FareGrid(low, high, step)


# ============================================================================
# CHOICE AND EQUILIBRIUM
# ============================================================================

def test_tie_keeps_current_fare():
    assert choose_fare([1.0, 1.2, 1.4], [5.0, 5.0, 5.0], 1.2) == 1.2


def test_tie_without_current_goes_lower():
    assert choose_fare([1.0, 1.2, 1.4], [5.0, 1.0, 5.0], 1.2) == 1.0


@pytest.mark.parametrize("moves, expected", [
    ([MOVE_STAY, MOVE_STAY], True),
    ([MOVE_UP, MOVE_STAY], False),
    ([MOVE_STAY, MOVE_DOWN, MOVE_STAY, MOVE_STAY], True),
    ([MOVE_STAY], False),
    ([], False),
])
def test_detect_equilibrium(moves, expected):
    assert detect_equilibrium(moves) is expected


def test_schedule_freezes_after_two_stays():
    schedule = GameSchedule(turnover_interval=5, first_turn_day=5)
    world = PayoffWorld([1.2, 1.2], {1.0: 0.0, 1.2: 1.0, 1.4: 0.0}, day=5)
    assert not schedule.turn_due(4)
    assert schedule.record(play_turn(world, schedule.current_mover, GRID, 5, payoff_evaluator)) is False
    assert schedule.current_mover == 1
    assert schedule.record(play_turn(world, schedule.current_mover, GRID, 5, payoff_evaluator)) is True
    assert schedule.frozen and not schedule.turn_due(world.day)


def test_schedule_without_freeze_keeps_playing():
    schedule = GameSchedule(turnover_interval=5, first_turn_day=0, freeze_on_equilibrium=False)
    world = PayoffWorld([1.2, 1.2], {1.0: 0.0, 1.2: 1.0, 1.4: 0.0})
    for _ in range(3):
        schedule.record(play_turn(world, schedule.current_mover, GRID, 5, payoff_evaluator))
    assert schedule.turn_due(world.day)
    assert schedule.converged_rounds == 3


# ============================================================================
# TURNS
# ============================================================================

@pytest.mark.parametrize("payoffs", list(itertools.permutations([1.0, 2.0, 3.0]))
                         + list(itertools.product([0.0, 1.0], repeat=3)))
def test_turn_commits_best_candidate(payoffs):
    down, stay, up = payoffs
    world = PayoffWorld([1.2, 2.0], {1.0: down, 1.2: stay, 1.4: up})
    record = play_turn(world, 0, GRID, 3, payoff_evaluator)

    best = max(payoffs)
    if stay == best:
        expected, move = 1.2, MOVE_STAY
    elif down == best:
        expected, move = 1.0, MOVE_DOWN
    else:
        expected, move = 1.4, MOVE_UP
    assert record.committed_fare == pytest.approx(expected)
    assert record.move == move
    assert world.fare(0) == pytest.approx(expected)
    assert world.fare(1) == 2.0
    assert world.day == 3
    assert record.realized_utility == pytest.approx(3 * best)
    assert record.consistent


def test_turn_record_row():
    world = PayoffWorld([1.2, 2.0], {1.0: 1.0, 1.2: 2.0, 1.4: 3.0})
    row = play_turn(world, 0, GRID, 2, payoff_evaluator, turn=4).to_row()
    assert row['turn'] == 4
    assert row['utility_down'] == 2.0 and row['utility_stay'] == 4.0 and row['utility_up'] == 6.0
    assert row['fare_difference'] == pytest.approx(1.4 - 2.0)


def test_zero_day_interval_evaluates_to_nothing(tiny_scenario):
    world = WorldState.build(tiny_scenario)
    assert evaluate_move(world, 0, 1.4, 0) == 0.0


def world_state(world):
    """Every piece of state a rollout could disturb"""
    populations = {
        (kind, name): getattr(getattr(world, kind), name).copy()
        for kind in ('travelers', 'drivers')
        for name in ('aware', 'latent_e', 'latent_wom', 'latent_m', 'last_signal')
    }
    return {
        'day': world.day,
        'fares': world.fares(),
        'platforms': list(world.platforms),
        'loyalty': [world.history.rates(p).copy() for p in range(len(world.platforms))],
        'expected_travelers': world.expected_travelers.copy(),
        'populations': populations,
    }


def test_rollout_leaves_snapshot_untouched(regulated_scenario):
    world = WorldState.build(regulated_scenario)
    world.advance(2, 0)
    before = world_state(world)
    evaluate_move(world, 0, 1.6, 3)
    after = world_state(world)
    assert after['day'] == before['day']
    assert after['fares'] == before['fares']
    assert after['platforms'] == before['platforms']
    for was, now in zip(before['loyalty'], after['loyalty']):
        np.testing.assert_array_equal(now, was)
    np.testing.assert_array_equal(after['expected_travelers'], before['expected_travelers'])
    for key, was in before['populations'].items():
        np.testing.assert_array_equal(after['populations'][key], was, err_msg=str(key))


def test_rollouts_repeat_exactly(tiny_scenario):
    world = WorldState.build(tiny_scenario)
    world.advance(1, 0)
    assert evaluate_move(world, 1, 1.2, 3) == evaluate_move(world, 1, 1.2, 3)


def test_committed_fare_earns_its_prediction(tiny_scenario):
    world = WorldState.build(tiny_scenario)
    world.advance(tiny_scenario.turnover_days, 0)
    record = play_turn(world, 0, tiny_scenario.fare_grid, tiny_scenario.turnover_days)
    assert record.realized_utility == record.predicted_utility
    assert record.day == tiny_scenario.turnover_days
    assert world.day == 2 * tiny_scenario.turnover_days


@pytest.mark.slow
def test_parallel_rollouts_match_serial(tiny_scenario):
    serial = WorldState.build(tiny_scenario)
    parallel = WorldState.build(tiny_scenario)
    a = play_turn(serial, 0, tiny_scenario.fare_grid, 3, workers=1)
    b = play_turn(parallel, 0, tiny_scenario.fare_grid, 3, workers=2)
    assert a.utilities == b.utilities
    assert a.committed_fare == b.committed_fare
