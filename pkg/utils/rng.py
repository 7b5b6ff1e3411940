"""
Named random substreams for reproducible simulations.

Every stream is a pure function of (seed, day, purpose, platform), so two
worlds that simulate the same day draw identical numbers. Pricing-game
rollouts rely on this: all candidate fares see the same demand, choices and
meetings, and the real world replays the winning rollout exactly.
"""
from dataclasses import dataclass

import numpy as np

from src.exceptions import SimulationInputError

# Stable codes; changing them changes every simulated trajectory
PURPOSES = {
    'setup': 0,
    'positions': 1,
    'demand': 2,
    'traveler_choice': 3,
    'driver_choice': 4,
    'traveler_wom': 5,
    'driver_wom': 6,
    'traveler_marketing': 7,
    'driver_marketing': 8,
}

SETUP_DAY = -1


@dataclass(frozen=True)
class RngPlan:
    """Master seed plus derivation of per-day, per-purpose generators"""

    seed: int

    def __post_init__(self):
        if self.seed < 0:
            raise SimulationInputError(f"seed must be non-negative, got {self.seed}")

    def stream(self, day: int, purpose: str, platform: int = 0) -> np.random.Generator:
        """
        Get the generator for one (day, purpose, platform) cell.

        Args:
            day: Simulation day, or SETUP_DAY for population setup
            purpose: One of PURPOSES
            platform: Platform index for per-platform draws, 0 otherwise

        Returns:
            Freshly seeded numpy Generator
        """
        if purpose not in PURPOSES:
            raise SimulationInputError(f"unknown random stream purpose '{purpose}'")
        if day < SETUP_DAY:
            raise SimulationInputError(f"day must be >= {SETUP_DAY}, got {day}")
        entropy = [self.seed, day - SETUP_DAY, PURPOSES[purpose], platform]
        return np.random.default_rng(np.random.SeedSequence(entropy))

    def fork(self) -> "RngPlan":
        """Plan for a rollout clone; yields the same streams as this one"""
        return RngPlan(self.seed)
