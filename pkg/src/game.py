"""
Turn-based duopoly pricing game.

Platforms take turns. The mover simulates every neighbouring fare on a
copy of the world, picks the one with the highest summed profit over the
turnover interval, and the real world then lives through that interval
under the committed fare. Rollouts and the real world draw from the same
per-day random streams, so the committed fare earns exactly its prediction.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import repeat
from typing import TYPE_CHECKING, Callable, Dict, List, Sequence, Tuple

from src.exceptions import SimulationInputError
from utils.constants import MONEY_TOLERANCE_EUR, MOVE_DOWN, MOVE_STAY, MOVE_UP

if TYPE_CHECKING:
    from src.world import WorldState

logger = logging.getLogger(__name__)

# Grid arithmetic is done in decimal steps; this many digits survive rounding
_FARE_DIGITS = 10


@dataclass(frozen=True)
class FareGrid:
    min_fare: float = 0.2
    max_fare: float = 3.0
    step: float = 0.2

    def __post_init__(self):
        if not self.step > 0:
            raise SimulationInputError(f"fare step must be positive, got {self.step}")
        if not self.min_fare < self.max_fare:
            raise SimulationInputError(
                f"fare grid needs min < max, got [{self.min_fare}, {self.max_fare}]")
        if self.min_fare < 0:
            raise SimulationInputError(f"fares must be non-negative, got {self.min_fare}")
        span = (self.max_fare - self.min_fare) / self.step
        if abs(span - round(span)) > 1e-9:
            raise SimulationInputError(
                f"fare grid span {self.max_fare - self.min_fare:g} is not a multiple of step {self.step:g}")

    @property
    def points(self) -> List[float]:
        count = int(round((self.max_fare - self.min_fare) / self.step)) + 1
        return [round(self.min_fare + i * self.step, _FARE_DIGITS) for i in range(count)]

    def on_grid(self, fare: float) -> bool:
        k = (fare - self.min_fare) / self.step
        inside = self.min_fare - 1e-9 <= fare <= self.max_fare + 1e-9
        return inside and abs(k - round(k)) <= 1e-9

    def snap(self, fare: float) -> float:
        """Nearest grid point, without clipping to the bounds"""
        k = round((fare - self.min_fare) / self.step)
        return round(self.min_fare + k * self.step, _FARE_DIGITS)


@dataclass(frozen=True)
class TurnRecord:
    """One committed move and what it earned"""
    turn: int
    day: int
    mover: int
    previous_fare: float
    committed_fare: float
    move: str
    candidates: Tuple[float, ...]
    utilities: Tuple[float, ...]
    predicted_utility: float
    realized_utility: float
    days: int
    fares_after: Tuple[float, ...] = ()

    @property
    def consistent(self) -> bool:
        return abs(self.realized_utility - self.predicted_utility) <= MONEY_TOLERANCE_EUR

    def to_row(self) -> Dict[str, float]:
        by_move = {classify_move(self.previous_fare, f): u for f, u in zip(self.candidates, self.utilities)}
        row = {
            'turn': self.turn,
            'day': self.day,
            'mover': self.mover,
            'days': self.days,
            'previous_fare': self.previous_fare,
            'committed_fare': self.committed_fare,
            'move': self.move,
        }
        for move in (MOVE_DOWN, MOVE_STAY, MOVE_UP):
            row[f'utility_{move}'] = by_move.get(move, math.nan)
        row['predicted_utility'] = self.predicted_utility
        row['realized_utility'] = self.realized_utility
        row['fare_difference'] = (self.fares_after[0] - self.fares_after[1]
                                  if len(self.fares_after) == 2 else math.nan)
        return row


@dataclass
class GameSchedule:
    """
    Who moves when.

    Attributes:
        turnover_interval: Days between turns
        first_turn_day: Day of the first turn
        current_mover: Platform whose turn is next
        converged_rounds: Consecutive turns that kept the fare
        frozen: Fares are fixed for the rest of the run
    """
    turnover_interval: int
    first_turn_day: int
    platforms: int = 2
    stay_turns: int = 2
    freeze_on_equilibrium: bool = True
    current_mover: int = 0
    converged_rounds: int = 0
    frozen: bool = False
    turns: List[TurnRecord] = field(default_factory=list)

    def __post_init__(self):
        if self.turnover_interval < 1:
            raise SimulationInputError(f"turnover interval must be at least one day, got {self.turnover_interval}")
        if self.first_turn_day < 0:
            raise SimulationInputError(f"first turn day must be >= 0, got {self.first_turn_day}")

    def turn_due(self, day: int) -> bool:
        return not self.frozen and day >= self.first_turn_day

    def record(self, turn: TurnRecord) -> bool:
        """
        Log a committed move and hand the turn to the next platform.

        Returns:
            True if this move completed an equilibrium
        """
        self.turns.append(turn)
        self.converged_rounds = self.converged_rounds + 1 if turn.move == MOVE_STAY else 0
        self.current_mover = (self.current_mover + 1) % self.platforms
        reached = detect_equilibrium([t.move for t in self.turns], self.stay_turns)
        if reached and self.freeze_on_equilibrium:
            self.frozen = True
        return reached


def classify_move(previous: float, committed: float) -> str:
    if abs(committed - previous) <= 1e-9:
        return MOVE_STAY
    return MOVE_UP if committed > previous else MOVE_DOWN


def candidate_moves(current_fare: float, grid: FareGrid) -> List[float]:
    """
    Fares the mover may pick: one step down, stay, one step up, within bounds.

    Raises:
        SimulationInputError: current fare is off the grid
    """
    if not grid.on_grid(current_fare):
        raise SimulationInputError(f"fare {current_fare} is not on the fare grid")
    current = grid.snap(current_fare)
    moves = [grid.snap(current - grid.step), current, grid.snap(current + grid.step)]
    return [f for f in moves if grid.min_fare - 1e-9 <= f <= grid.max_fare + 1e-9]


def evaluate_move(snapshot: "WorldState", mover: int, candidate_fare: float, days: int) -> float:
    """
    Summed profit of the mover over `days` days under a candidate fare.

    The snapshot is cloned first and never touched. The competitor keeps
    its fare throughout.
    """
    if days <= 0:
        return 0.0
    rollout = snapshot.clone()
    rollout.set_fare(mover, candidate_fare)
    return math.fsum(rollout.advance(days, mover))


def choose_fare(candidates: Sequence[float], utilities: Sequence[float], current: float) -> float:
    """Argmax; ties keep the current fare, then go to the lower fare"""
    best = max(utilities)
    tied = [f for f, u in zip(candidates, utilities) if u >= best - MONEY_TOLERANCE_EUR]
    for fare in tied:
        if abs(fare - current) <= 1e-9:
            return fare
    return min(tied)


Evaluator = Callable[["WorldState", int, float, int], float]


def play_turn(world: "WorldState", mover: int, grid: FareGrid, days: int,
              evaluator: Evaluator = evaluate_move, workers: int = 1,
              turn: int = 0) -> TurnRecord:
    """
    Evaluate the mover's candidate fares, commit the best and advance the world.

    Args:
        world: Real world at a turn boundary; advanced by `days` days
        mover: Platform choosing its fare
        grid: Fare grid
        days: Interval to evaluate and then live through
        evaluator: Maps (snapshot, mover, fare, days) to utility
        workers: Processes for the candidate rollouts; 1 evaluates in-process
        turn: Turn number for the record

    Returns:
        TurnRecord with every candidate's predicted utility and the realized one
    """
    previous = world.fare(mover)
    candidates = candidate_moves(previous, grid)
    snapshot = world.clone()
    start_day = world.day

    if workers > 1 and len(candidates) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(candidates))) as pool:
            utilities = list(pool.map(evaluator, repeat(snapshot), repeat(mover), candidates, repeat(days)))
    else:
        utilities = [evaluator(snapshot, mover, fare, days) for fare in candidates]
    for fare, utility in zip(candidates, utilities):
        logger.debug("Turn %d, platform %d: fare %.2f -> utility %.2f", turn, mover, fare, utility)

    chosen = choose_fare(candidates, utilities, previous)
    predicted = utilities[candidates.index(chosen)]
    world.set_fare(mover, chosen)
    realized = math.fsum(world.advance(days, mover)) if days > 0 else 0.0

    record = TurnRecord(
        turn=turn,
        day=start_day,
        mover=mover,
        previous_fare=previous,
        committed_fare=chosen,
        move=classify_move(previous, chosen),
        candidates=tuple(candidates),
        utilities=tuple(float(u) for u in utilities),
        predicted_utility=float(predicted),
        realized_utility=realized,
        days=days,
        fares_after=tuple(world.fares()),
    )
    if not record.consistent:
        logger.warning("Turn %d: platform %d realized %.6f but rollout predicted %.6f",
                       turn, mover, realized, predicted)
    logger.info("Turn %d (day %d): platform %d %s %.2f -> %.2f EUR/km",
                turn, start_day, mover, record.move, previous, chosen)
    return record


def detect_equilibrium(moves: Sequence[str], stay_turns: int = 2) -> bool:
    """True when the last `stay_turns` committed moves all kept the fare"""
    if stay_turns < 1:
        raise SimulationInputError(f"stay turns must be at least 1, got {stay_turns}")
    recent = list(moves)[-stay_turns:]
    return len(recent) == stay_turns and all(m == MOVE_STAY for m in recent)
