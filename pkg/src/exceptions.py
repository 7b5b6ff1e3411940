"""
Error hierarchy for the ride-sourcing simulator
"""
from typing import List, Optional


class SimulationError(Exception):
    """Base class for every error raised by the simulator"""


class SimulationInputError(SimulationError, ValueError):
    """An operation received an argument outside its domain"""


class ConnectivityError(SimulationError):
    """A destination cannot be reached, or a network is not strongly connected"""


class _FileError(SimulationError):
    """Error tied to a location in an input file"""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        location = ""
        if path is not None:
            location = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{location}{message}")


class NetworkFileError(_FileError):
    """Malformed or inconsistent network file"""


class DemandFileError(_FileError):
    """Malformed or inconsistent demand file"""


class ScenarioConfigError(SimulationError):
    """
    Invalid scenario configuration.

    Collects every problem found so a scenario file can be fixed in one pass.
    """

    def __init__(self, problems: List[str], source: Optional[str] = None):
        self.problems = list(problems)
        self.source = source
        header = f"invalid scenario {source}" if source else "invalid scenario"
        super().__init__(header + ": " + "; ".join(self.problems))
