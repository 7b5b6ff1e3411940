"""
Within-day operations: one shift as a discrete-event simulation.

Requests arrive, each platform dispatches its closest idle driver
("first-dispatch"), vehicles drive to the pickup and on to the destination at
constant speed, and fares accrue per ride. Requests that find no idle driver
queue FIFO per platform until a driver frees up or the shift ends.
"""
import heapq
import itertools
import logging
import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Deque, Dict, Iterable, List, Mapping, Sequence, Tuple

from src.exceptions import SimulationInputError
from src.network import RoadNetwork
from utils.constants import STATUS_ENROUTE, STATUS_IDLE, STATUS_IN_RIDE

logger = logging.getLogger(__name__)

# Event priorities at equal timestamps: freed drivers are visible to
# requests arriving in the same second
_DROPOFF = 0
_PICKUP = 1
_REQUEST = 2


@dataclass(frozen=True)
class TripRequest:
    """One traveler's request for today, on the platform they chose"""
    traveler_id: int
    origin: int
    destination: int
    request_time: int
    platform: int


@dataclass
class DriverShiftState:
    """
    A driver working today.

    `fares_today` holds gross fares; the commission split happens when the
    platform settles the day.
    """
    driver_id: int
    platform: int
    position: int
    status: str = STATUS_IDLE
    fares_today: float = 0.0
    busy_time: int = 0


@dataclass(frozen=True)
class RideRecord:
    traveler_id: int
    driver_id: int
    platform: int
    request_time: int
    dispatch_time: int
    pickup_time: int
    dropoff_time: int
    wait_time: int
    in_vehicle_time: int
    distance_m: float
    fare: float


@dataclass
class DayOutcome:
    """Everything observable about one shift"""
    rides: List[RideRecord] = field(default_factory=list)
    unserved: List[int] = field(default_factory=list)
    unserved_platform: Dict[int, int] = field(default_factory=dict)
    drivers: List[DriverShiftState] = field(default_factory=list)
    platform_fares: Dict[int, float] = field(default_factory=dict)

    @property
    def driver_fares(self) -> Dict[int, float]:
        return {d.driver_id: d.fares_today for d in self.drivers}

    def for_platform(self, platform: int) -> "DayOutcome":
        """Restrict the outcome to one platform's rides, requests and drivers"""
        unserved = [t for t in self.unserved if self.unserved_platform[t] == platform]
        return DayOutcome(
            rides=[r for r in self.rides if r.platform == platform],
            unserved=unserved,
            unserved_platform={t: platform for t in unserved},
            drivers=[d for d in self.drivers if d.platform == platform],
            platform_fares={platform: self.platform_fares.get(platform, 0.0)},
        )


def travel_seconds(net: RoadNetwork, origin: int, destination: int) -> int:
    """Travel time rounded up to whole seconds"""
    return int(math.ceil(net.travel_time(origin, destination) - 1e-9))


def match(requests_pending: Iterable[TripRequest],
          idle_drivers: Iterable[DriverShiftState],
          net: RoadNetwork) -> List[Tuple[TripRequest, DriverShiftState]]:
    """
    First-dispatch matching.

    Walks pending requests in queue order and gives each the idle driver of
    its own platform with the shortest travel time to the pickup; equal
    times go to the lower driver id. Each driver is assigned at most once.

    Args:
        requests_pending: Requests in FIFO order
        idle_drivers: Currently idle drivers (any platform)
        net: Road network

    Returns:
        List of (request, driver) assignments; unmatched requests are omitted
    """
    available: Dict[int, List[DriverShiftState]] = {}
    for driver in idle_drivers:
        available.setdefault(driver.platform, []).append(driver)

    assignments = []
    for request in requests_pending:
        candidates = available.get(request.platform)
        if not candidates:
            continue
        best = min(
            candidates,
            key=lambda d: (net.travel_time(d.position, request.origin), d.driver_id),
        )
        candidates.remove(best)
        assignments.append((request, best))
    return assignments


def _validate(net: RoadNetwork, requests: Sequence[TripRequest],
              drivers: Sequence[DriverShiftState], fares: Mapping[int, float],
              shift_duration: int):
    if shift_duration <= 0:
        raise SimulationInputError(f"shift duration must be positive, got {shift_duration}")
    seen = set()
    for r in requests:
        if r.traveler_id in seen:
            raise SimulationInputError(f"traveler {r.traveler_id} has more than one request")
        seen.add(r.traveler_id)
        if not net.has_node(r.origin) or not net.has_node(r.destination):
            raise SimulationInputError(f"request of traveler {r.traveler_id} uses an unknown node")
        if r.origin == r.destination:
            raise SimulationInputError(f"request of traveler {r.traveler_id} has origin == destination")
        if not 0 <= r.request_time < shift_duration:
            raise SimulationInputError(
                f"request of traveler {r.traveler_id} at {r.request_time}s is outside the shift")
        if r.platform not in fares:
            raise SimulationInputError(f"request of traveler {r.traveler_id} names unknown platform {r.platform}")
    driver_ids = set()
    for d in drivers:
        if d.driver_id in driver_ids:
            raise SimulationInputError(f"driver {d.driver_id} listed twice")
        driver_ids.add(d.driver_id)
        if not net.has_node(d.position):
            raise SimulationInputError(f"driver {d.driver_id} starts at unknown node {d.position}")
        if d.platform not in fares:
            raise SimulationInputError(f"driver {d.driver_id} works for unknown platform {d.platform}")
    for platform, fare in fares.items():
        if fare < 0:
            raise SimulationInputError(f"platform {platform} has negative fare {fare}")


def run_day(net: RoadNetwork, requests: Sequence[TripRequest],
            drivers: Sequence[DriverShiftState], fares: Mapping[int, float],
            shift_duration: int) -> DayOutcome:
    """
    Simulate one shift.

    Args:
        net: Road network
        requests: Today's requests, each tagged with the chosen platform
        drivers: Drivers active today; not mutated
        fares: Per-platform fare in EUR/km
        shift_duration: Shift length in seconds

    Returns:
        DayOutcome with one RideRecord per served traveler and the ids of
        travelers still queued at shift end
    """
    _validate(net, requests, drivers, fares, shift_duration)

    fleet = {d.driver_id: replace(d) for d in drivers}
    by_traveler = {r.traveler_id: r for r in requests}
    queues: Dict[int, Deque[TripRequest]] = {p: deque() for p in fares}
    idle = {p: {} for p in fares}
    for d in sorted(fleet.values(), key=lambda d: d.driver_id):
        d.status = STATUS_IDLE
        idle[d.platform][d.driver_id] = d

    events: List[tuple] = []
    seq = itertools.count()
    for r in sorted(requests, key=lambda r: (r.request_time, r.traveler_id)):
        heapq.heappush(events, (r.request_time, _REQUEST, next(seq), r.traveler_id))

    rides: Dict[int, dict] = {}
    platform_fares = {p: 0.0 for p in fares}

    def dispatch(now: int, platform: int):
        pending = queues[platform]
        if not pending or not idle[platform]:
            return
        for request, driver in match(list(pending), idle[platform].values(), net):
            pending.remove(request)
            del idle[platform][driver.driver_id]
            pickup = now + travel_seconds(net, driver.position, request.origin)
            driver.status = STATUS_ENROUTE
            rides[request.traveler_id] = {'driver_id': driver.driver_id, 'dispatch_time': now}
            heapq.heappush(events, (pickup, _PICKUP, next(seq), request.traveler_id))

    while events:
        now, kind, _, traveler_id = heapq.heappop(events)
        request = by_traveler[traveler_id]

        if kind == _REQUEST:
            queues[request.platform].append(request)
            dispatch(now, request.platform)

        elif kind == _PICKUP:
            ride = rides[traveler_id]
            driver = fleet[ride['driver_id']]
            driver.status = STATUS_IN_RIDE
            driver.position = request.origin
            ride['pickup_time'] = now
            dropoff = now + travel_seconds(net, request.origin, request.destination)
            heapq.heappush(events, (dropoff, _DROPOFF, next(seq), traveler_id))

        else:
            ride = rides[traveler_id]
            driver = fleet[ride['driver_id']]
            distance = net.distance(request.origin, request.destination)
            fare = fares[request.platform] * distance / 1000.0
            driver.status = STATUS_IDLE
            driver.position = request.destination
            driver.fares_today += fare
            driver.busy_time += now - ride['dispatch_time']
            platform_fares[request.platform] += fare
            ride['record'] = RideRecord(
                traveler_id=traveler_id,
                driver_id=driver.driver_id,
                platform=request.platform,
                request_time=request.request_time,
                dispatch_time=ride['dispatch_time'],
                pickup_time=ride['pickup_time'],
                dropoff_time=now,
                wait_time=ride['pickup_time'] - request.request_time,
                in_vehicle_time=now - ride['pickup_time'],
                distance_m=distance,
                fare=fare,
            )
            idle[driver.platform][driver.driver_id] = driver
            # No new dispatches once the shift is over
            if now < shift_duration:
                dispatch(now, driver.platform)

    unserved = sorted(r.traveler_id for q in queues.values() for r in q)
    outcome = DayOutcome(
        rides=sorted((ride['record'] for ride in rides.values()), key=lambda r: r.traveler_id),
        unserved=unserved,
        unserved_platform={t: by_traveler[t].platform for t in unserved},
        drivers=sorted(fleet.values(), key=lambda d: d.driver_id),
        platform_fares=platform_fares,
    )
    logger.debug("Day simulated: %d rides, %d unserved", len(outcome.rides), len(unserved))
    return outcome
