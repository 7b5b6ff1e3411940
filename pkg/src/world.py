"""
World state and the day-to-day loop body.

A WorldState holds everything that carries over from one day to the next:
both populations' learning state, the platforms' books, drivers' work
history and yesterday's demand. `step()` simulates one day in a fixed phase
order and is shared by the real run and by pricing-game rollouts.
"""
import logging
import math
from dataclasses import replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.choice import (
    DRIVER,
    TRAVELER,
    AgentPopulation,
    experience_signal_driver,
    experience_signal_traveler,
    experience_update,
    marketing_round,
    outside_utility,
    participation_choices,
    pt_generalized_cost,
    word_of_mouth_round,
)
from src.demand import TravelPatterns, load_demand, setup_travel_patterns, synth_demand
from src.exceptions import DemandFileError, SimulationInputError
from src.network import RoadNetwork, generate_grid, load_network
from src.platforms import (
    DailyLedger,
    ParticipationHistory,
    PlatformState,
    lockout_select,
    settle_day,
)
from src.scenario import PLATFORM_COUNT, ScenarioConfig
from src.withinday import DriverShiftState, run_day
from utils.rng import SETUP_DAY, RngPlan

logger = logging.getLogger(__name__)

DAY_RECORD_COLUMNS = [
    'day', 'platform', 'fare', 'candidate_drivers', 'active_drivers', 'locked_out_drivers',
    'travelers', 'served', 'unserved', 'mean_wait_s', 'mean_hourly_income',
    'fares_total', 'revenue', 'subsidy', 'fixed_cost', 'profit', 'accumulated_capital',
    'aware_travelers', 'aware_drivers',
]

RIDE_LOG_COLUMNS = [
    'day', 'traveler_id', 'platform', 'served', 'driver_id', 'request_time_s',
    'dispatch_time_s', 'pickup_time_s', 'dropoff_time_s', 'wait_s', 'in_vehicle_s',
    'distance_m', 'fare',
]

DRIVER_LOG_COLUMNS = [
    'day', 'driver_id', 'platform', 'active', 'rides', 'gross_fares', 'earned',
    'subsidy', 'realized_income', 'realized_hourly', 'busy_time_s',
]


def load_inputs(config: ScenarioConfig) -> Tuple[RoadNetwork, Optional[TravelPatterns]]:
    """Network and (optional) demand file named by a scenario"""
    if config.network_file is not None:
        network = load_network(config.network_path, apsp_node_threshold=config.apsp_node_threshold)
    else:
        network = generate_grid(config.grid_rows, config.grid_cols, config.grid_edge_m,
                                speed=config.speed_mps,
                                apsp_node_threshold=config.apsp_node_threshold)
    patterns = None
    if config.demand_file is not None:
        patterns = load_demand(config.demand_path, network)
        if patterns.size != config.travelers:
            logger.warning("Demand file has %d travelers; scenario asked for %d, using the file",
                           patterns.size, config.travelers)
        late = np.flatnonzero(patterns.request_times >= config.shift_seconds)
        if len(late):
            raise DemandFileError(
                f"traveler {int(late[0])} requests at {int(patterns.request_times[late[0]])} s, "
                f"after the {config.shift_seconds} s shift", str(config.demand_path))
    return network, patterns


class WorldState:
    """
    Everything the day loop carries between days.

    Attributes:
        day: Next day to simulate
        travelers, drivers: Learning state per population
        platforms: Books and fare per platform
        history: Which platform each driver worked for recently
        records: One dict per platform and simulated day
        ride_log, driver_log: Raw per-ride and per-driver rows from `log_from_day` on
    """

    def __init__(self, config: ScenarioConfig, network: RoadNetwork, patterns: TravelPatterns,
                 home_nodes: np.ndarray, plan: Optional[RngPlan] = None,
                 log_from_day: Optional[int] = None):
        self.config = config
        self.network = network
        self.patterns = patterns
        self.home_nodes = np.asarray(home_nodes)
        self.plan = plan or RngPlan(config.seed)
        self.log_from_day = log_from_day
        self.day = 0

        self.travelers = AgentPopulation(TRAVELER, patterns.size, PLATFORM_COUNT, config.initial_latent)
        self.drivers = AgentPopulation(DRIVER, len(self.home_nodes), PLATFORM_COUNT, config.initial_latent)
        self.platforms = [
            PlatformState(
                id=p,
                fare=config.initial_fare,
                commission=config.commission,
                fixed_cost=config.fixed_cost_eur,
                lockout_enabled=config.lockout_active,
            )
            for p in range(PLATFORM_COUNT)
        ]
        self.history = ParticipationHistory(len(self.home_nodes), config.loyalty_window_days)
        initial = int(round(config.initial_demand_share * patterns.size))
        self.expected_travelers = np.full(PLATFORM_COUNT, initial, dtype=int)

        distances = np.array([network.distance(int(o), int(d))
                              for o, d in zip(patterns.origins, patterns.destinations)], dtype=float)
        self.pt_cost = pt_generalized_cost(
            distances, config.pt_speed_mps, config.pt_fare_eur, config.pt_access_s,
            config.value_of_time_eur_per_h, config.wait_multiplier)

        self.records: List[dict] = []
        self.ride_log: List[dict] = []
        self.driver_log: List[dict] = []

    @classmethod
    def build(cls, config: ScenarioConfig, network: Optional[RoadNetwork] = None,
              patterns: Optional[TravelPatterns] = None,
              log_from_day: Optional[int] = None) -> "WorldState":
        """
        Set up day 0: load or generate inputs, draw trip patterns and driver homes.

        Args:
            config: Validated scenario
            network: Overrides the scenario's network source
            patterns: Overrides the scenario's demand source
            log_from_day: Keep raw ride/driver rows from this day on; None keeps none
        """
        if network is None:
            network, file_patterns = load_inputs(config)
            patterns = patterns or file_patterns
        plan = RngPlan(config.seed)
        if patterns is None:
            patterns = setup_travel_patterns(network, config.travelers, plan.stream(SETUP_DAY, 'setup'))
        ids = np.asarray(network.node_ids)
        homes = ids[plan.stream(SETUP_DAY, 'positions').integers(0, len(ids), size=config.drivers)]
        logger.info("World built: %d travelers, %d drivers, %r", patterns.size, config.drivers, network)
        return cls(config, network, patterns, homes, plan, log_from_day)

    # ------------------------------------------------------------------
    # Fares and snapshots
    # ------------------------------------------------------------------

    def fare(self, platform: int) -> float:
        return self.platforms[platform].fare

    def fares(self) -> List[float]:
        return [p.fare for p in self.platforms]

    def set_fare(self, platform: int, fare: float) -> None:
        if not self.config.fare_grid.on_grid(fare):
            raise SimulationInputError(f"fare {fare} is not on the fare grid")
        self.platforms[platform] = replace(self.platforms[platform], fare=self.config.fare_grid.snap(fare))

    def clone(self, with_records: bool = False) -> "WorldState":
        """
        Independent copy; simulating it never touches this world.

        Network, trip patterns and driver homes are read-only and shared.
        Output rows are copied only when `with_records` is set; rollout
        clones keep no raw logs.
        """
        twin = WorldState.__new__(WorldState)
        twin.config = self.config
        twin.network = self.network
        twin.patterns = self.patterns
        twin.home_nodes = self.home_nodes
        twin.plan = self.plan.fork()
        twin.day = self.day
        twin.travelers = self.travelers.copy()
        twin.drivers = self.drivers.copy()
        twin.platforms = list(self.platforms)
        twin.history = self.history.copy()
        twin.expected_travelers = self.expected_travelers.copy()
        twin.pt_cost = self.pt_cost
        if with_records:
            twin.log_from_day = self.log_from_day
            twin.records = list(self.records)
            twin.ride_log = list(self.ride_log)
            twin.driver_log = list(self.driver_log)
        else:
            twin.log_from_day = None
            twin.records, twin.ride_log, twin.driver_log = [], [], []
        return twin

    def advance(self, days: int, platform: int) -> List[float]:
        """Simulate `days` days; the platform's daily profits"""
        return [self.step()[platform].profit for _ in range(days)]

    # ------------------------------------------------------------------
    # One day
    # ------------------------------------------------------------------

    def step(self) -> Dict[int, DailyLedger]:
        """
        Simulate the next day.

        Phases: marketing, word of mouth, participation choices, lockout,
        the shift itself, settlement, experience learning, history.

        Returns:
            Settled ledger per platform
        """
        cfg = self.config
        day = self.day
        weights = cfg.weights
        rates = cfg.learning_rates

        # Marketing and word of mouth
        for agents, kind in ((self.travelers, TRAVELER), (self.drivers, DRIVER)):
            marketing_round(agents, cfg.marketing_reach, self.plan.stream(day, f'{kind}_marketing'),
                            signal=cfg.marketing_signal, rate=rates.marketing)
            word_of_mouth_round(agents, cfg.wom_meetings_per_agent, self.plan.stream(day, f'{kind}_wom'),
                                weights, asc=cfg.asc_platform, rate=rates.wom)

        # Participation
        u_o = outside_utility(cfg.outside_utility, cfg.asc_outside)
        traveler_choice = participation_choices(
            self.travelers, u_o, weights, cfg.scales, self.plan.stream(day, 'traveler_choice'),
            asc=cfg.asc_platform, unaware_excluded=cfg.unaware_excluded)
        driver_choice = participation_choices(
            self.drivers, u_o, weights, cfg.scales, self.plan.stream(day, 'driver_choice'),
            asc=cfg.asc_platform, unaware_excluded=cfg.unaware_excluded)

        # Lockout
        worked = np.full(self.drivers.size, -1, dtype=int)
        candidates_per_platform = {}
        for state in self.platforms:
            candidates = [int(d) for d in np.flatnonzero(driver_choice == state.id)]
            candidates_per_platform[state.id] = candidates
            if state.lockout_enabled:
                rates_p = self.history.rates(state.id)
                active = lockout_select(candidates, int(self.expected_travelers[state.id]),
                                        {d: float(rates_p[d]) for d in candidates},
                                        cfg.driver_traveler_ratio)
            else:
                active = candidates
            worked[active] = state.id

        # Operations
        requests = synth_demand(self.patterns, day, self.plan.stream(day, 'demand'),
                                traveler_choice, cfg.shift_seconds)
        shift_drivers = [DriverShiftState(driver_id=int(d), platform=int(worked[d]),
                                          position=int(self.home_nodes[d]))
                         for d in np.flatnonzero(worked >= 0)]
        outcome = run_day(self.network, requests, shift_drivers,
                          {s.id: s.fare for s in self.platforms}, cfg.shift_seconds)

        # Settlement
        ledgers: Dict[int, DailyLedger] = {}
        settlements = {}
        for p, state in enumerate(self.platforms):
            settlement = settle_day(outcome.for_platform(state.id), cfg.policy, state)
            self.platforms[p] = settlement.state
            ledgers[state.id] = settlement.ledger
            settlements[state.id] = settlement

        # Experience learning
        members = np.flatnonzero(traveler_choice >= 0)
        if len(members):
            served = np.zeros(self.travelers.size, dtype=bool)
            wait = np.zeros(self.travelers.size)
            in_vehicle = np.zeros(self.travelers.size)
            fare_paid = np.zeros(self.travelers.size)
            for ride in outcome.rides:
                served[ride.traveler_id] = True
                wait[ride.traveler_id] = ride.wait_time
                in_vehicle[ride.traveler_id] = ride.in_vehicle_time
                fare_paid[ride.traveler_id] = ride.fare
            signals = experience_signal_traveler(
                wait[members], in_vehicle[members], fare_paid[members], self.pt_cost[members],
                cfg.value_of_time_eur_per_h, cfg.wait_multiplier, served=served[members])
            experience_update(self.travelers, members, traveler_choice[members],
                              np.atleast_1d(signals), rates.experience)

        settled = [d for s in settlements.values() for d in s.drivers]
        if settled:
            ids = np.array([d.driver_id for d in settled])
            signals = experience_signal_driver(np.array([d.realized_income for d in settled]),
                                               cfg.shift_hours, cfg.reservation_wage_eur_per_h)
            experience_update(self.drivers, ids, worked[ids], np.atleast_1d(signals), rates.experience)

        self.history.record(worked)
        for state in self.platforms:
            self.expected_travelers[state.id] = int(np.sum(traveler_choice == state.id))

        self._record(day, traveler_choice, candidates_per_platform, worked, requests, outcome, settlements)
        self.day += 1
        return ledgers

    def _record(self, day, traveler_choice, candidates_per_platform, worked, requests, outcome, settlements):
        for state in self.platforms:
            p = state.id
            settlement = settlements[p]
            ledger = settlement.ledger
            rides = [r for r in outcome.rides if r.platform == p]
            active = len(settlement.drivers)
            self.records.append({
                'day': day,
                'platform': p,
                'fare': state.fare,
                'candidate_drivers': len(candidates_per_platform[p]),
                'active_drivers': active,
                'locked_out_drivers': len(candidates_per_platform[p]) - active,
                'travelers': int(np.sum(traveler_choice == p)),
                'served': len(rides),
                'unserved': sum(1 for t in outcome.unserved if outcome.unserved_platform[t] == p),
                'mean_wait_s': float(np.mean([r.wait_time for r in rides])) if rides else math.nan,
                'mean_hourly_income': (float(np.mean([d.realized_hourly for d in settlement.drivers]))
                                       if active else math.nan),
                'fares_total': ledger.fares_total,
                'revenue': ledger.revenue,
                'subsidy': ledger.subsidy,
                'fixed_cost': ledger.fixed_cost,
                'profit': ledger.profit,
                'accumulated_capital': state.accumulated_capital,
                'aware_travelers': int(self.travelers.aware[:, p].sum()),
                'aware_drivers': int(self.drivers.aware[:, p].sum()),
            })

        if self.log_from_day is None or day < self.log_from_day:
            return
        for ride in outcome.rides:
            self.ride_log.append({
                'day': day,
                'traveler_id': ride.traveler_id,
                'platform': ride.platform,
                'served': True,
                'driver_id': ride.driver_id,
                'request_time_s': ride.request_time,
                'dispatch_time_s': ride.dispatch_time,
                'pickup_time_s': ride.pickup_time,
                'dropoff_time_s': ride.dropoff_time,
                'wait_s': ride.wait_time,
                'in_vehicle_s': ride.in_vehicle_time,
                'distance_m': ride.distance_m,
                'fare': ride.fare,
            })
        request_times = {r.traveler_id: r.request_time for r in requests}
        for traveler_id in outcome.unserved:
            self.ride_log.append({
                'day': day,
                'traveler_id': traveler_id,
                'platform': outcome.unserved_platform[traveler_id],
                'served': False,
                'driver_id': -1,
                'request_time_s': request_times[traveler_id],
                'dispatch_time_s': math.nan,
                'pickup_time_s': math.nan,
                'dropoff_time_s': math.nan,
                'wait_s': math.nan,
                'in_vehicle_s': math.nan,
                'distance_m': math.nan,
                'fare': 0.0,
            })

        for settlement in settlements.values():
            for d in settlement.drivers:
                self.driver_log.append({
                    'day': day,
                    'driver_id': d.driver_id,
                    'platform': d.platform,
                    'active': True,
                    'rides': d.rides,
                    'gross_fares': d.gross_fares,
                    'earned': d.earned,
                    'subsidy': d.subsidy,
                    'realized_income': d.realized_income,
                    'realized_hourly': d.realized_hourly,
                    'busy_time_s': d.busy_time,
                })
        for p, candidates in candidates_per_platform.items():
            for d in candidates:
                if worked[d] != p:
                    self.driver_log.append({
                        'day': day, 'driver_id': d, 'platform': p, 'active': False, 'rides': 0,
                        'gross_fares': 0.0, 'earned': 0.0, 'subsidy': 0.0, 'realized_income': 0.0,
                        'realized_hourly': 0.0, 'busy_time_s': 0,
                    })
