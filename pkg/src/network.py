"""
Road network: directed graph with edge lengths, constant-speed travel times,
synthetic grid generation and a sectioned CSV file format.
"""
import logging
import threading
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra, shortest_path

from src.exceptions import ConnectivityError, NetworkFileError, SimulationInputError
from utils.constants import (
    NETWORK_EDGE_COLUMNS,
    NETWORK_NODE_COLUMNS,
    NETWORK_SPEED_KEY,
    VEHICLE_SPEED_MPS,
)

logger = logging.getLogger(__name__)

Node = Tuple[int, float, float]
Edge = Tuple[int, int, float]

DEFAULT_APSP_NODE_THRESHOLD = 2000


class RoadNetwork:
    """
    Immutable directed road graph.

    Distances are shortest-path lengths in meters; travel times divide them by
    the constant vehicle speed. Up to `apsp_node_threshold` nodes the full
    all-pairs table is computed at construction, beyond that rows are computed
    on demand and cached under a lock.
    """

    def __init__(self, nodes: Iterable[Node], edges: Iterable[Edge],
                 speed: float = VEHICLE_SPEED_MPS,
                 apsp_node_threshold: int = DEFAULT_APSP_NODE_THRESHOLD):
        self._nodes: List[Node] = [(int(i), float(x), float(y)) for i, x, y in nodes]
        self._edges: List[Edge] = [(int(a), int(b), float(l)) for a, b, l in edges]
        self._speed = float(speed)

        if not self._nodes:
            raise SimulationInputError("network needs at least one node")
        if not self._speed > 0:
            raise SimulationInputError(f"speed must be positive, got {speed}")

        self._index: Dict[int, int] = {}
        for position, (node_id, _, _) in enumerate(self._nodes):
            if node_id in self._index:
                raise SimulationInputError(f"duplicate node id {node_id}")
            self._index[node_id] = position

        # Parallel edges collapse to the shortest one
        lengths: Dict[Tuple[int, int], float] = {}
        for a, b, length in self._edges:
            if not length > 0:
                raise SimulationInputError(f"edge {a}->{b} has non-positive length {length}")
            for endpoint in (a, b):
                if endpoint not in self._index:
                    raise SimulationInputError(f"edge {a}->{b} references unknown node {endpoint}")
            key = (self._index[a], self._index[b])
            lengths[key] = min(length, lengths.get(key, np.inf))

        n = len(self._nodes)
        rows = [i for i, _ in lengths]
        cols = [j for _, j in lengths]
        self._graph = csr_matrix((list(lengths.values()), (rows, cols)), shape=(n, n))

        n_components, _ = connected_components(self._graph, directed=True, connection='strong')
        if n_components != 1:
            raise ConnectivityError(
                f"network is not strongly connected ({n_components} components)"
            )

        self._apsp_node_threshold = int(apsp_node_threshold)
        self._lock = threading.Lock()
        self._rows: Dict[int, np.ndarray] = {}
        self._table: Optional[np.ndarray] = None
        if n <= self._apsp_node_threshold:
            self._table = shortest_path(self._graph, method='D', directed=True)
            logger.debug("Precomputed all-pairs distances for %d nodes", n)

    # ------------------------------------------------------------------
    # Attributes
    # ------------------------------------------------------------------

    @property
    def nodes(self) -> List[Node]:
        return list(self._nodes)

    @property
    def edges(self) -> List[Edge]:
        return list(self._edges)

    @property
    def speed(self) -> float:
        return self._speed

    @property
    def node_ids(self) -> List[int]:
        return [node_id for node_id, _, _ in self._nodes]

    @property
    def num_nodes(self) -> int:
        return len(self._nodes)

    def has_node(self, node_id: int) -> bool:
        return node_id in self._index

    def node_index(self, node_id: int) -> int:
        try:
            return self._index[node_id]
        except KeyError:
            raise SimulationInputError(f"unknown node id {node_id}") from None

    # ------------------------------------------------------------------
    # Distances
    # ------------------------------------------------------------------

    def _distance_row(self, source: int) -> np.ndarray:
        if self._table is not None:
            return self._table[source]
        with self._lock:
            row = self._rows.get(source)
            if row is None:
                row = dijkstra(self._graph, directed=True, indices=source)
                self._rows[source] = row
        return row

    def distance(self, origin: int, destination: int) -> float:
        """
        Shortest path length in meters.

        Raises:
            SimulationInputError: unknown node id
            ConnectivityError: destination unreachable from origin
        """
        i = self.node_index(origin)
        j = self.node_index(destination)
        length = float(self._distance_row(i)[j])
        if not np.isfinite(length):
            raise ConnectivityError(f"node {destination} is unreachable from node {origin}")
        return length

    def travel_time(self, origin: int, destination: int) -> float:
        """Shortest travel time in seconds at the network's constant speed"""
        return self.distance(origin, destination) / self._speed

    def distances_from(self, origin: int) -> np.ndarray:
        """Distances in meters from origin to every node, in node order"""
        return np.array(self._distance_row(self.node_index(origin)), copy=True)

    def scaled(self, factor: float) -> "RoadNetwork":
        """Copy of this network with every edge length multiplied by factor"""
        return RoadNetwork(
            self._nodes,
            [(a, b, length * factor) for a, b, length in self._edges],
            speed=self._speed,
            apsp_node_threshold=self._apsp_node_threshold,
        )

    # Locks do not pickle; rollout workers receive a fresh one
    def __getstate__(self):
        state = self.__dict__.copy()
        del state['_lock']
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()

    def __repr__(self):
        return (f"RoadNetwork(nodes={self.num_nodes}, edges={len(self._edges)}, "
                f"speed={self._speed} m/s)")


def shortest_travel_time(net: RoadNetwork, origin: int, destination: int) -> float:
    """
    Minimal travel time between two nodes.

    Args:
        net: Road network
        origin: Origin node id
        destination: Destination node id

    Returns:
        Duration in seconds (path length / speed)
    """
    return net.travel_time(origin, destination)


def generate_grid(rows: int, cols: int, edge_length: float,
                  speed: float = VEHICLE_SPEED_MPS,
                  apsp_node_threshold: int = DEFAULT_APSP_NODE_THRESHOLD) -> RoadNetwork:
    """
    Build a bidirectional lattice.

    Node ids run row-major from 0; node (r, c) sits at (c * edge_length,
    r * edge_length).

    Args:
        rows: Number of node rows, at least 2
        cols: Number of node columns, at least 2
        edge_length: Length of every edge in meters
        speed: Vehicle speed in m/s

    Returns:
        RoadNetwork with 2 * (rows * (cols - 1) + cols * (rows - 1)) directed edges
    """
    if rows < 2 or cols < 2:
        raise SimulationInputError(f"grid needs at least 2x2 nodes, got {rows}x{cols}")
    if not edge_length > 0:
        raise SimulationInputError(f"edge length must be positive, got {edge_length}")

    nodes = [(r * cols + c, c * edge_length, r * edge_length)
             for r in range(rows) for c in range(cols)]
    edges = []
    for r in range(rows):
        for c in range(cols):
            here = r * cols + c
            if c + 1 < cols:
                edges.append((here, here + 1, edge_length))
                edges.append((here + 1, here, edge_length))
            if r + 1 < rows:
                edges.append((here, here + cols, edge_length))
                edges.append((here + cols, here, edge_length))
    return RoadNetwork(nodes, edges, speed=speed, apsp_node_threshold=apsp_node_threshold)


# ============================================================================
# FILE FORMAT
# ============================================================================

def _parse_section(rows: List[Tuple[int, str]], columns: List[str], section: str,
                   path: str, id_columns: List[str]) -> pd.DataFrame:
    """Turn the raw lines of one section into a typed DataFrame"""
    if not rows:
        raise NetworkFileError(f"section [{section}] is empty", path)
    header_line, header = rows[0]
    names = [name.strip() for name in header.split(',')]
    if names != columns:
        raise NetworkFileError(
            f"section [{section}] header must be '{','.join(columns)}', got '{header.strip()}'",
            path, header_line)

    records = []
    for line_no, text in rows[1:]:
        fields = [field.strip() for field in text.split(',')]
        if len(fields) != len(columns):
            raise NetworkFileError(
                f"expected {len(columns)} fields in [{section}] row, got {len(fields)}",
                path, line_no)
        records.append([line_no] + fields)

    frame = pd.DataFrame(records, columns=['line'] + columns)
    for column in columns:
        frame[column] = pd.to_numeric(frame[column], errors='coerce')
    bad = frame[frame[columns].isna().any(axis=1)]
    if not bad.empty:
        line_no = int(bad['line'].iloc[0])
        raise NetworkFileError(f"non-numeric value in [{section}] row", path, line_no)
    fractional = frame[(frame[id_columns] % 1 != 0).any(axis=1)]
    if not fractional.empty:
        line_no = int(fractional['line'].iloc[0])
        raise NetworkFileError(f"node ids in [{section}] row must be integers", path, line_no)
    frame[id_columns] = frame[id_columns].astype(np.int64)
    return frame


def load_network(path: Union[str, Path],
                 apsp_node_threshold: int = DEFAULT_APSP_NODE_THRESHOLD) -> RoadNetwork:
    """
    Load a network file.

    Args:
        path: Path to a sectioned CSV network file
        apsp_node_threshold: Node count up to which all pairs are precomputed

    Returns:
        Validated RoadNetwork

    Raises:
        NetworkFileError: malformed row, dangling edge endpoint, disconnected graph
    """
    path = str(path)
    header: Dict[str, Tuple[int, str]] = {}
    sections: Dict[str, List[Tuple[int, str]]] = {}
    current = None

    try:
        with open(path, encoding='utf-8') as f:
            lines = f.readlines()
    except OSError as e:
        raise NetworkFileError(f"cannot read network file: {e}", path) from e

    for line_no, raw in enumerate(lines, 1):
        text = raw.strip()
        if not text or text.startswith('#'):
            continue
        if text.startswith('[') and text.endswith(']'):
            current = text[1:-1].strip().lower()
            if current not in ('nodes', 'edges'):
                raise NetworkFileError(f"unknown section [{current}]", path, line_no)
            if current in sections:
                raise NetworkFileError(f"duplicate section [{current}]", path, line_no)
            sections[current] = []
            continue
        if current is None:
            key, sep, value = text.partition(':')
            if not sep:
                raise NetworkFileError(f"expected 'key: value' header, got '{text}'", path, line_no)
            header[key.strip()] = (line_no, value.strip())
            continue
        sections[current].append((line_no, text))

    if NETWORK_SPEED_KEY not in header:
        raise NetworkFileError(f"missing header key '{NETWORK_SPEED_KEY}'", path)
    speed_line, speed_text = header[NETWORK_SPEED_KEY]
    try:
        speed = float(speed_text)
    except ValueError:
        raise NetworkFileError(f"'{NETWORK_SPEED_KEY}' must be a number", path, speed_line) from None
    if not speed > 0:
        raise NetworkFileError(f"'{NETWORK_SPEED_KEY}' must be positive", path, speed_line)

    for section in ('nodes', 'edges'):
        if section not in sections:
            raise NetworkFileError(f"missing section [{section}]", path)

    nodes = _parse_section(sections['nodes'], NETWORK_NODE_COLUMNS, 'nodes', path, ['id'])
    edges = _parse_section(sections['edges'], NETWORK_EDGE_COLUMNS, 'edges', path,
                           ['from_id', 'to_id'])

    duplicated = nodes[nodes['id'].duplicated()]
    if not duplicated.empty:
        row = duplicated.iloc[0]
        raise NetworkFileError(f"duplicate node id {int(row['id'])}", path, int(row['line']))

    known = set(nodes['id'].astype(int))
    for row in edges.itertuples(index=False):
        a, b = int(row.from_id), int(row.to_id)
        if a not in known or b not in known:
            missing = a if a not in known else b
            raise NetworkFileError(f"edge {a}->{b} references unknown node {missing}", path, int(row.line))
        if not row.length_m > 0:
            raise NetworkFileError(f"edge {a}->{b} has non-positive length {row.length_m}", path, int(row.line))

    try:
        net = RoadNetwork(
            zip(nodes['id'].astype(int), nodes['x_m'], nodes['y_m']),
            zip(edges['from_id'].astype(int), edges['to_id'].astype(int), edges['length_m']),
            speed=speed,
            apsp_node_threshold=apsp_node_threshold,
        )
    except ConnectivityError as e:
        raise NetworkFileError(str(e), path) from e

    logger.info("Loaded %r from %s", net, path)
    return net


def save_network(net: RoadNetwork, path: Union[str, Path]) -> Path:
    """Write a network in the sectioned CSV format read by load_network"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(f"{NETWORK_SPEED_KEY}: {net.speed!r}\n")
        f.write("[nodes]\n")
        f.write(",".join(NETWORK_NODE_COLUMNS) + "\n")
        for node_id, x, y in net.nodes:
            f.write(f"{node_id},{x!r},{y!r}\n")
        f.write("[edges]\n")
        f.write(",".join(NETWORK_EDGE_COLUMNS) + "\n")
        for a, b, length in net.edges:
            f.write(f"{a},{b},{length!r}\n")
    return path
