"""
Day-to-day behaviour of travelers and drivers.

Each agent keeps, per platform, three latent scores (experience, word-of-mouth,
marketing) read out through a sigmoid into utility components in (0, 1).
Signals in [0, 1] move a latent by rate * (signal - 0.5), so opinions shift
fastest around neutral and barely move once they are extreme. The weighted
sum of the components plus an alternative-specific constant is the perceived
utility that feeds a two-level nested logit: ride-sourcing platforms in nest
"rs", public transport (travelers) or the reservation wage (drivers) alone in
nest "o".
"""
import logging
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np
from scipy.special import expit, logsumexp

from src.exceptions import SimulationInputError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

TRAVELER = 'traveler'
DRIVER = 'driver'


# ============================================================================
# TYPES
# ============================================================================

@dataclass(frozen=True)
class ChoiceScales:
    """Nest-level scale mu and within-nest scale mu_n, with mu <= mu_n"""
    mu: float = 1.0
    mu_nest: float = 2.0

    def __post_init__(self):
        if not (self.mu > 0 and self.mu_nest > 0):
            raise SimulationInputError("choice scales must be positive")
        if self.mu > self.mu_nest:
            raise SimulationInputError(
                f"nested logit needs mu <= mu_n, got mu={self.mu}, mu_n={self.mu_nest}")


@dataclass(frozen=True)
class UtilityWeights:
    beta_e: float = 0.7
    beta_wom: float = 0.2
    beta_m: float = 0.1

    def __post_init__(self):
        betas = (self.beta_e, self.beta_wom, self.beta_m)
        if min(betas) < 0:
            raise SimulationInputError("utility weights must be non-negative")
        if abs(sum(betas) - 1.0) > 1e-9:
            raise SimulationInputError(f"utility weights must sum to 1, got {sum(betas)}")


@dataclass(frozen=True)
class LearningRates:
    experience: float = 1.0
    wom: float = 1.0
    marketing: float = 1.0

    def __post_init__(self):
        if min(self.experience, self.wom, self.marketing) <= 0:
            raise SimulationInputError("learning rates must be positive")


class AgentPopulation:
    """
    Learning state of one population (travelers or drivers), one row per
    agent and one column per platform.

    Attributes:
        aware: Awareness flags G; never reset once set
        latent_e, latent_wom, latent_m: Latent scores per component
        last_signal: Most recent experience signal (NaN before the first)
    """

    def __init__(self, kind: str, size: int, platforms: int, initial_latent: float = 0.0):
        if kind not in (TRAVELER, DRIVER):
            raise SimulationInputError(f"unknown population kind '{kind}'")
        if size < 0 or platforms < 1:
            raise SimulationInputError("population needs size >= 0 and at least one platform")
        self.kind = kind
        shape = (size, platforms)
        self.aware = np.zeros(shape, dtype=bool)
        self.latent_e = np.full(shape, float(initial_latent))
        self.latent_wom = np.full(shape, float(initial_latent))
        self.latent_m = np.full(shape, float(initial_latent))
        self.last_signal = np.full(shape, np.nan)

    @property
    def size(self) -> int:
        return self.aware.shape[0]

    @property
    def platforms(self) -> int:
        return self.aware.shape[1]

    def composite(self, weights: UtilityWeights, asc: ArrayLike = 0.0) -> np.ndarray:
        """Perceived utility U^{a,p} for every agent and platform"""
        return (weights.beta_e * expit(self.latent_e)
                + weights.beta_m * expit(self.latent_m)
                + weights.beta_wom * expit(self.latent_wom)
                + asc)

    def copy(self) -> "AgentPopulation":
        clone = AgentPopulation.__new__(AgentPopulation)
        clone.kind = self.kind
        for name in ('aware', 'latent_e', 'latent_wom', 'latent_m', 'last_signal'):
            setattr(clone, name, getattr(self, name).copy())
        return clone


# ============================================================================
# S-SHAPED LEARNING
# ============================================================================

def update_component(latent: ArrayLike, signal: ArrayLike, rate: float) -> Tuple[ArrayLike, ArrayLike]:
    """
    Move a latent score along the S-curve.

    Args:
        latent: Current latent score(s)
        signal: New signal(s) in [0, 1]; 0.5 is neutral
        rate: Learning rate kappa > 0

    Returns:
        (new latent, new utility component in (0, 1))
    """
    signal_arr = np.asarray(signal, dtype=float)
    if np.any(~np.isfinite(signal_arr)) or np.any(signal_arr < 0) or np.any(signal_arr > 1):
        raise SimulationInputError("learning signals must lie in [0, 1]")
    if not rate > 0:
        raise SimulationInputError(f"learning rate must be positive, got {rate}")
    new_latent = latent + rate * (signal - 0.5)
    return new_latent, expit(new_latent)


def experience_signal_driver(income_today: ArrayLike, hours: float,
                             reservation_wage: float) -> ArrayLike:
    """
    Map a day's realized income to a signal; 0.5 at the reservation wage.

    Args:
        income_today: Realized income in EUR, minimum-wage top-up included
        hours: Shift length in hours
        reservation_wage: EUR per hour

    Returns:
        clamp(0.5 + 0.5 * (hourly - RW) / RW, 0, 1)
    """
    if not hours > 0:
        raise SimulationInputError(f"shift hours must be positive, got {hours}")
    if not reservation_wage > 0:
        raise SimulationInputError(f"reservation wage must be positive, got {reservation_wage}")
    hourly = np.asarray(income_today, dtype=float) / hours
    signal = np.clip(0.5 + 0.5 * (hourly - reservation_wage) / reservation_wage, 0.0, 1.0)
    return float(signal) if signal.ndim == 0 else signal


def traveler_generalized_cost(wait: ArrayLike, in_vehicle: ArrayLike, fare_paid: ArrayLike,
                              value_of_time: float = 10.0, wait_multiplier: float = 2.0) -> ArrayLike:
    """Fare plus time cost, with waiting weighted by wait_multiplier (EUR)"""
    return fare_paid + value_of_time / 3600.0 * (np.asarray(wait) * wait_multiplier + np.asarray(in_vehicle))


def pt_generalized_cost(trip_distance_m: ArrayLike, pt_speed_mps: float, pt_fare: float,
                        pt_access_s: float = 0.0, value_of_time: float = 10.0,
                        wait_multiplier: float = 2.0) -> ArrayLike:
    """
    Generalized cost of the public-transport alternative for a trip.

    Access and transfer time counts as waiting.
    """
    if not pt_speed_mps > 0:
        raise SimulationInputError("public transport speed must be positive")
    ride_s = np.asarray(trip_distance_m, dtype=float) / pt_speed_mps
    return pt_fare + value_of_time / 3600.0 * (pt_access_s * wait_multiplier + ride_s)


def experience_signal_traveler(wait: ArrayLike, in_vehicle: ArrayLike, fare_paid: ArrayLike,
                               pt_generalized_cost: ArrayLike, value_of_time: float = 10.0,
                               wait_multiplier: float = 2.0,
                               served: Union[bool, np.ndarray] = True) -> ArrayLike:
    """
    Compare a ride with the public-transport alternative; 0.5 means indifferent.

    Args:
        wait: Seconds from request to pickup
        in_vehicle: Seconds on board
        fare_paid: EUR
        pt_generalized_cost: EUR, positive
        value_of_time: EUR per hour
        wait_multiplier: Weight of waiting relative to riding
        served: False for travelers left unserved; their signal is 0

    Returns:
        clamp(0.5 + 0.5 * (pt - g) / pt, 0, 1)
    """
    pt = np.asarray(pt_generalized_cost, dtype=float)
    if np.any(pt <= 0):
        raise SimulationInputError("public transport generalized cost must be positive")
    served_arr = np.asarray(served, dtype=bool)
    wait = np.where(served_arr, wait, 0.0)
    in_vehicle = np.where(served_arr, in_vehicle, 0.0)
    fare_paid = np.where(served_arr, fare_paid, 0.0)
    if np.any(wait < 0) or np.any(in_vehicle < 0) or np.any(fare_paid < 0):
        raise SimulationInputError("ride times and fares must be non-negative")
    g = traveler_generalized_cost(wait, in_vehicle, fare_paid, value_of_time, wait_multiplier)
    signal = np.where(served_arr, np.clip(0.5 + 0.5 * (pt - g) / pt, 0.0, 1.0), 0.0)
    return float(signal) if signal.ndim == 0 else signal


# ============================================================================
# INFORMATION DIFFUSION
# ============================================================================

def _meeting_pairs(size: int, meetings_per_agent: float, rng: np.random.Generator):
    """Disjoint random pairs; full rounds for the integer part, a partial one for the rest"""
    full_rounds = int(np.floor(meetings_per_agent))
    partial = meetings_per_agent - full_rounds
    rounds = []
    for _ in range(full_rounds):
        rounds.append(rng.permutation(size))
    if partial > 0:
        joining = np.flatnonzero(rng.random(size) < partial)
        rounds.append(rng.permutation(joining))
    for order in rounds:
        usable = len(order) // 2 * 2
        if usable:
            yield order[:usable].reshape(-1, 2)


def word_of_mouth_round(agents: AgentPopulation, meetings_per_agent: float,
                        rng: np.random.Generator, weights: UtilityWeights,
                        asc: ArrayLike = 0.0, rate: float = 1.0) -> int:
    """
    Agents meet in random pairs and tell each other what they think of the
    platforms they know.

    The listener's word-of-mouth latent for every platform the speaker is
    aware of is updated with the speaker's perceived utility (clamped to
    [0, 1]) and the listener becomes aware of that platform.

    Args:
        agents: Population, updated in place
        meetings_per_agent: Expected meetings per agent per day
        rng: Random generator
        weights: Utility weights for the speaker's composite utility
        asc: Alternative-specific constant(s) for platforms
        rate: Word-of-mouth learning rate

    Returns:
        Number of meetings held
    """
    if meetings_per_agent < 0:
        raise SimulationInputError(f"meeting rate must be non-negative, got {meetings_per_agent}")
    meetings = 0
    for pairs in _meeting_pairs(agents.size, meetings_per_agent, rng):
        opinion = np.clip(agents.composite(weights, asc), 0.0, 1.0)
        knows = agents.aware.copy()
        speakers = np.concatenate([pairs[:, 1], pairs[:, 0]])
        listeners = np.concatenate([pairs[:, 0], pairs[:, 1]])
        heard = knows[speakers]
        updated, _ = update_component(agents.latent_wom[listeners], opinion[speakers], rate)
        agents.latent_wom[listeners] = np.where(heard, updated, agents.latent_wom[listeners])
        agents.aware[listeners] |= heard
        meetings += len(pairs)
    return meetings


def marketing_round(agents: AgentPopulation, reach: Union[float, Sequence[float]],
                    rng: np.random.Generator, signal: float = 0.7, rate: float = 1.0) -> np.ndarray:
    """
    Platform campaigns notify unaware agents and feed the marketing component.

    Args:
        agents: Population, updated in place
        reach: Probability p_m (scalar or per platform) that an unaware agent is notified
        rng: Random generator
        signal: Marketing signal applied to every aware agent
        rate: Marketing learning rate

    Returns:
        Newly aware agents per platform
    """
    reach_arr = np.broadcast_to(np.asarray(reach, dtype=float), (agents.platforms,))
    if np.any(reach_arr < 0) or np.any(reach_arr > 1):
        raise SimulationInputError("marketing reach must lie in [0, 1]")
    draws = rng.random(agents.aware.shape)
    newly = ~agents.aware & (draws < reach_arr)
    agents.aware |= newly
    updated, _ = update_component(agents.latent_m, signal, rate)
    agents.latent_m = np.where(agents.aware, updated, agents.latent_m)
    return newly.sum(axis=0)


# ============================================================================
# NESTED LOGIT
# ============================================================================

@dataclass(frozen=True)
class NestedLogitProbabilities:
    """
    Attributes:
        nest: (n, 2) P(rs), P(o)
        conditional: (n, P) P(a | rs)
        choice: (n, P + 1) P(a) for every platform, then the outside option
    """
    nest: np.ndarray
    conditional: np.ndarray
    choice: np.ndarray


def nested_logit_probabilities(u_rs: np.ndarray, aware: np.ndarray, u_o: ArrayLike,
                               scales: ChoiceScales,
                               unaware_excluded: bool = False) -> NestedLogitProbabilities:
    """
    Choice probabilities for a batch of agents.

    Unaware platforms enter the rs nest as exp(mu_n * 0) unless
    unaware_excluded drops them. If nothing is left in the rs nest the
    outside option gets probability 1.

    Args:
        u_rs: (n, P) perceived utilities of the platforms
        aware: (n, P) awareness flags G
        u_o: (n,) or scalar perceived utility of the outside option
        scales: Nest and within-nest scales
        unaware_excluded: Drop unaware platforms instead of zeroing their utility
    """
    u_rs = np.atleast_2d(np.asarray(u_rs, dtype=float))
    aware = np.atleast_2d(np.asarray(aware, dtype=bool))
    u_o = np.broadcast_to(np.asarray(u_o, dtype=float), (u_rs.shape[0],))
    if not (np.all(np.isfinite(u_rs)) and np.all(np.isfinite(u_o))):
        raise SimulationInputError("perceived utilities must be finite")

    scaled = scales.mu_nest * np.where(aware, u_rs, 0.0)
    if unaware_excluded:
        scaled = np.where(aware, scaled, -np.inf)

    available = np.isfinite(scaled).any(axis=1)
    safe = np.where(available[:, None], scaled, 0.0)
    lse = logsumexp(safe, axis=1)
    conditional = np.where(available[:, None], np.exp(safe - lse[:, None]), 0.0)

    logsum_rs = lse / scales.mu_nest
    # Nest o holds a single alternative, so its logsum is its utility
    nest_scores = scales.mu * np.column_stack([logsum_rs, u_o])
    nest_scores[~available, 0] = -np.inf
    nest = np.exp(nest_scores - logsumexp(nest_scores, axis=1)[:, None])

    choice = np.column_stack([nest[:, :1] * conditional, nest[:, 1]])
    return NestedLogitProbabilities(nest=nest, conditional=conditional, choice=choice)


def sample_choices(probabilities: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw one alternative index per row of a probability matrix"""
    cumulative = np.cumsum(probabilities, axis=1)
    draws = rng.random(probabilities.shape[0]) * cumulative[:, -1]
    picked = (cumulative <= draws[:, None]).sum(axis=1)
    return np.minimum(picked, probabilities.shape[1] - 1)


def nested_logit(u_rs: Sequence[float], aware: Sequence[bool], u_o: float,
                 scales: ChoiceScales, rng: np.random.Generator,
                 unaware_excluded: bool = False) -> int:
    """
    Sample one agent's choice.

    Returns:
        Index of the chosen platform, or len(u_rs) for the outside option
    """
    probs = nested_logit_probabilities(
        np.asarray(u_rs, dtype=float)[None, :], np.asarray(aware, dtype=bool)[None, :],
        u_o, scales, unaware_excluded)
    return int(sample_choices(probs.choice, rng)[0])


def participation_choices(agents: AgentPopulation, u_o: ArrayLike, weights: UtilityWeights,
                          scales: ChoiceScales, rng: np.random.Generator,
                          asc: ArrayLike = 0.0, unaware_excluded: bool = False) -> np.ndarray:
    """
    Daily participation choice for a whole population.

    A drawn platform the agent is not aware of resolves to the outside
    option: nobody can request or drive for a service they have not heard of.

    Returns:
        (n,) chosen platform index per agent, -1 for the outside option
    """
    if agents.size == 0:
        return np.zeros(0, dtype=int)
    probs = nested_logit_probabilities(
        agents.composite(weights, asc), agents.aware, u_o, scales, unaware_excluded)
    picked = sample_choices(probs.choice, rng)
    chosen = np.where(picked < agents.platforms, picked, -1)
    rows = np.arange(agents.size)
    known = agents.aware[rows, np.clip(chosen, 0, None)]
    return np.where((chosen >= 0) & known, chosen, -1)


def experience_update(agents: AgentPopulation, members: np.ndarray, platforms: np.ndarray,
                      signals: np.ndarray, rate: float) -> None:
    """Apply experience signals to the chosen platform of each listed agent"""
    if len(members) == 0:
        return
    updated, _ = update_component(agents.latent_e[members, platforms], signals, rate)
    agents.latent_e[members, platforms] = updated
    agents.last_signal[members, platforms] = signals


def outside_utility(base: float, asc: float = 0.0) -> float:
    """Perceived utility of the nest-o alternative (G is always 1)"""
    return base + asc


__all__ = [
    'ChoiceScales', 'UtilityWeights', 'LearningRates',
    'AgentPopulation', 'update_component', 'experience_signal_driver',
    'experience_signal_traveler', 'traveler_generalized_cost', 'pt_generalized_cost',
    'word_of_mouth_round', 'marketing_round', 'NestedLogitProbabilities',
    'nested_logit_probabilities', 'sample_choices', 'nested_logit', 'participation_choices',
    'experience_update', 'outside_utility', 'TRAVELER', 'DRIVER',
]
