"""
Travel demand: fixed traveler trip patterns and the daily request list.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd

from src.exceptions import DemandFileError, SimulationInputError
from src.network import RoadNetwork
from src.withinday import TripRequest
from utils.constants import DEMAND_COLUMNS

logger = logging.getLogger(__name__)


@dataclass
class TravelPatterns:
    """
    One trip per traveler, indexed by traveler id.

    Attributes:
        origins, destinations: Node ids, fixed across days
        request_times: Seconds into the shift, or None to draw them daily
    """
    origins: np.ndarray
    destinations: np.ndarray
    request_times: Optional[np.ndarray] = None

    def __post_init__(self):
        if len(self.origins) != len(self.destinations):
            raise SimulationInputError("origins and destinations differ in length")
        if self.request_times is not None and len(self.request_times) != len(self.origins):
            raise SimulationInputError("request times and origins differ in length")

    @property
    def size(self) -> int:
        return len(self.origins)


def setup_travel_patterns(network: RoadNetwork, travelers: int,
                          rng: np.random.Generator) -> TravelPatterns:
    """
    Draw each traveler's origin and a distinct destination uniformly over the nodes.
    """
    ids = np.asarray(network.node_ids)
    n = len(ids)
    if travelers > 0 and n < 2:
        raise SimulationInputError("travelers need a network with at least two nodes")
    origin_idx = rng.integers(0, n, size=travelers)
    offset = rng.integers(0, n - 1, size=travelers) if travelers else np.zeros(0, dtype=int)
    destination_idx = np.where(offset >= origin_idx, offset + 1, offset)
    return TravelPatterns(origins=ids[origin_idx], destinations=ids[destination_idx])


def synth_demand(patterns: TravelPatterns, day: int, rng: np.random.Generator,
                 choices: np.ndarray, shift_seconds: int) -> List[TripRequest]:
    """
    Build today's requests.

    Request times are drawn for the whole population so the stream is
    consumed identically whoever participates.

    Args:
        patterns: Fixed origins and destinations
        day: Simulation day
        rng: Demand stream for the day
        choices: (n,) chosen platform per traveler, -1 for the outside option
        shift_seconds: Request times are uniform on [0, shift_seconds)

    Returns:
        One TripRequest per participating traveler, ordered by traveler id
    """
    choices = np.asarray(choices, dtype=int)
    if len(choices) != patterns.size:
        raise SimulationInputError(
            f"got {len(choices)} choices for {patterns.size} travelers")
    if patterns.request_times is not None:
        times = patterns.request_times
    else:
        times = rng.integers(0, shift_seconds, size=patterns.size)

    participants = np.flatnonzero(choices >= 0)
    requests = [
        TripRequest(
            traveler_id=int(t),
            origin=int(patterns.origins[t]),
            destination=int(patterns.destinations[t]),
            request_time=int(times[t]),
            platform=int(choices[t]),
        )
        for t in participants
    ]
    logger.debug("Day %d: %d requests", day, len(requests))
    return requests


def load_demand(path: Union[str, Path], network: Optional[RoadNetwork] = None) -> TravelPatterns:
    """
    Read a demand file.

    Args:
        path: CSV with traveler_id, origin_node, destination_node, request_time_s
        network: When given, every node must exist in it

    Returns:
        TravelPatterns with fixed request times

    Raises:
        DemandFileError: naming the offending line
    """
    path = str(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DemandFileError(f"cannot read demand file: {e}", path) from e
    frame = frame.fillna('')

    if list(frame.columns) != DEMAND_COLUMNS:
        raise DemandFileError(f"header must be '{','.join(DEMAND_COLUMNS)}'", path, 1)

    # Line 1 is the header
    frame['line'] = np.arange(len(frame)) + 2
    frame = frame[(frame[DEMAND_COLUMNS] != '').any(axis=1)].copy()
    for column in DEMAND_COLUMNS:
        frame[column] = pd.to_numeric(frame[column].str.strip(), errors='coerce')
    bad = frame[frame[DEMAND_COLUMNS].isna().any(axis=1)
                | (frame[DEMAND_COLUMNS] % 1 != 0).any(axis=1)]
    if not bad.empty:
        raise DemandFileError("fields must be integers", path, int(bad['line'].iloc[0]))
    frame[DEMAND_COLUMNS] = frame[DEMAND_COLUMNS].astype(np.int64)

    duplicated = frame[frame['traveler_id'].duplicated()]
    if not duplicated.empty:
        row = duplicated.iloc[0]
        raise DemandFileError(f"duplicate traveler id {row['traveler_id']}", path, int(row['line']))
    outside = frame[(frame['traveler_id'] < 0) | (frame['traveler_id'] >= len(frame))]
    if not outside.empty:
        raise DemandFileError(
            f"traveler ids must run 0..{len(frame) - 1}", path, int(outside['line'].iloc[0]))
    same = frame[frame['origin_node'] == frame['destination_node']]
    if not same.empty:
        raise DemandFileError("origin and destination must differ", path, int(same['line'].iloc[0]))
    negative = frame[frame['request_time_s'] < 0]
    if not negative.empty:
        raise DemandFileError("request time must be non-negative", path, int(negative['line'].iloc[0]))

    if network is not None:
        for row in frame.itertuples(index=False):
            for node in (row.origin_node, row.destination_node):
                if not network.has_node(int(node)):
                    raise DemandFileError(f"unknown node {node}", path, int(row.line))

    frame = frame.sort_values('traveler_id')
    logger.info("Loaded %d travelers from %s", len(frame), path)
    return TravelPatterns(
        origins=frame['origin_node'].to_numpy(),
        destinations=frame['destination_node'].to_numpy(),
        request_times=frame['request_time_s'].to_numpy(),
    )


def save_demand(patterns: TravelPatterns, path: Union[str, Path],
                request_times: Optional[np.ndarray] = None) -> Path:
    """Write patterns as a demand file; request times come from the patterns unless given"""
    times = patterns.request_times if request_times is None else request_times
    if times is None:
        raise SimulationInputError("a demand file needs request times")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({
        'traveler_id': np.arange(patterns.size),
        'origin_node': patterns.origins,
        'destination_node': patterns.destinations,
        'request_time_s': times,
    }).to_csv(path, index=False)
    return path
