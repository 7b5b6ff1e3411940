"""
Scenario configuration: a flat YAML mapping of documented keys.

Every key has a default in config.py; unknown keys, wrong types and
out-of-range values are rejected together so a file can be fixed in one pass.
"""
import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml

import config
from src.choice import ChoiceScales, LearningRates, UtilityWeights
from src.exceptions import ScenarioConfigError
from src.game import FareGrid
from src.platforms import RegulationPolicy

logger = logging.getLogger(__name__)

DEFAULTS: Dict[str, Any] = {
    "name": "scenario",
    "description": "",
    **config.NETWORK_CONFIG,
    **config.DEMAND_CONFIG,
    **config.CHOICE_CONFIG,
    **config.PLATFORM_CONFIG,
    **config.GAME_CONFIG,
    **config.SIMULATION_CONFIG,
    **config.OUTPUT_CONFIG,
}

INT_KEYS = {"grid_rows", "grid_cols", "apsp_node_threshold", "travelers", "drivers",
            "loyalty_window_days", "driver_traveler_ratio", "turnover_days",
            "equilibrium_stay_turns", "horizon_days", "seed", "rollout_workers",
            "summary_window_days"}
OPTIONAL_INT_KEYS = {"first_turn_day"}
BOOL_KEYS = {"unaware_excluded", "lockout", "freeze_on_equilibrium"}
STR_KEYS = {"name", "description"}
OPTIONAL_STR_KEYS = {"network_file", "demand_file"}
OPTIONAL_FLOAT_KEYS = {"min_wage_eur_per_h", "min_wage_relative_to_rw"}
FLOAT_KEYS = set(DEFAULTS) - INT_KEYS - OPTIONAL_INT_KEYS - BOOL_KEYS - STR_KEYS \
    - OPTIONAL_STR_KEYS - OPTIONAL_FLOAT_KEYS

PLATFORM_COUNT = 2


def _default(key: str):
    return field(default=DEFAULTS[key])


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = _default("name")
    description: str = _default("description")
    seed: int = _default("seed")
    horizon_days: int = _default("horizon_days")

    # Network
    grid_rows: int = _default("grid_rows")
    grid_cols: int = _default("grid_cols")
    grid_edge_m: float = _default("grid_edge_m")
    speed_mps: float = _default("speed_mps")
    network_file: Optional[str] = _default("network_file")
    apsp_node_threshold: int = _default("apsp_node_threshold")

    # Populations and shift
    travelers: int = _default("travelers")
    drivers: int = _default("drivers")
    demand_file: Optional[str] = _default("demand_file")
    shift_hours: float = _default("shift_hours")

    # Behaviour
    learning_rate_e: float = _default("learning_rate_e")
    learning_rate_wom: float = _default("learning_rate_wom")
    learning_rate_m: float = _default("learning_rate_m")
    initial_latent: float = _default("initial_latent")
    beta_e: float = _default("beta_e")
    beta_wom: float = _default("beta_wom")
    beta_m: float = _default("beta_m")
    asc_platform: float = _default("asc_platform")
    asc_outside: float = _default("asc_outside")
    outside_utility: float = _default("outside_utility")
    mu: float = _default("mu")
    mu_nest: float = _default("mu_nest")
    unaware_excluded: bool = _default("unaware_excluded")
    value_of_time_eur_per_h: float = _default("value_of_time_eur_per_h")
    wait_multiplier: float = _default("wait_multiplier")
    pt_speed_mps: float = _default("pt_speed_mps")
    pt_fare_eur: float = _default("pt_fare_eur")
    pt_access_s: float = _default("pt_access_s")
    reservation_wage_eur_per_h: float = _default("reservation_wage_eur_per_h")
    marketing_reach: float = _default("marketing_reach")
    marketing_signal: float = _default("marketing_signal")
    wom_meetings_per_agent: float = _default("wom_meetings_per_agent")

    # Platforms and regulation
    commission: float = _default("commission")
    fixed_cost_eur: float = _default("fixed_cost_eur")
    min_wage_eur_per_h: Optional[float] = _default("min_wage_eur_per_h")
    min_wage_relative_to_rw: Optional[float] = _default("min_wage_relative_to_rw")
    lockout: bool = _default("lockout")
    loyalty_window_days: int = _default("loyalty_window_days")
    driver_traveler_ratio: int = _default("driver_traveler_ratio")
    initial_demand_share: float = _default("initial_demand_share")

    # Pricing game
    fare_grid_min: float = _default("fare_grid_min")
    fare_grid_max: float = _default("fare_grid_max")
    fare_step: float = _default("fare_step")
    initial_fare: float = _default("initial_fare")
    turnover_days: int = _default("turnover_days")
    first_turn_day: Optional[int] = _default("first_turn_day")
    equilibrium_stay_turns: int = _default("equilibrium_stay_turns")
    freeze_on_equilibrium: bool = _default("freeze_on_equilibrium")

    # Execution and outputs
    rollout_workers: int = _default("rollout_workers")
    summary_window_days: int = _default("summary_window_days")

    # Directory relative file paths resolve against; not a scenario key
    base_dir: Optional[str] = field(default=None, compare=False)

    # ------------------------------------------------------------------
    # Derived settings
    # ------------------------------------------------------------------

    @property
    def min_wage(self) -> Optional[float]:
        """Regulated hourly wage in EUR, or None without regulation"""
        if self.min_wage_eur_per_h is not None:
            return float(self.min_wage_eur_per_h)
        if self.min_wage_relative_to_rw is not None:
            return self.min_wage_relative_to_rw * self.reservation_wage_eur_per_h
        return None

    @property
    def regulated(self) -> bool:
        return self.min_wage is not None

    @property
    def lockout_active(self) -> bool:
        """Lockout only applies under minimum-wage regulation"""
        return self.lockout and self.regulated

    @property
    def policy(self) -> RegulationPolicy:
        return RegulationPolicy(min_wage=self.min_wage, shift_hours=self.shift_hours)

    @property
    def shift_seconds(self) -> int:
        return int(round(self.shift_hours * 3600))

    @property
    def scales(self) -> ChoiceScales:
        return ChoiceScales(mu=self.mu, mu_nest=self.mu_nest)

    @property
    def weights(self) -> UtilityWeights:
        return UtilityWeights(beta_e=self.beta_e, beta_wom=self.beta_wom, beta_m=self.beta_m)

    @property
    def learning_rates(self) -> LearningRates:
        return LearningRates(experience=self.learning_rate_e, wom=self.learning_rate_wom,
                             marketing=self.learning_rate_m)

    @property
    def fare_grid(self) -> FareGrid:
        return FareGrid(min_fare=self.fare_grid_min, max_fare=self.fare_grid_max, step=self.fare_step)

    @property
    def first_turn(self) -> int:
        return self.turnover_days if self.first_turn_day is None else self.first_turn_day

    def resolve(self, relative: Optional[str]) -> Optional[Path]:
        if relative is None:
            return None
        path = Path(relative)
        if not path.is_absolute() and self.base_dir is not None:
            path = Path(self.base_dir) / path
        return path

    @property
    def network_path(self) -> Optional[Path]:
        return self.resolve(self.network_file)

    @property
    def demand_path(self) -> Optional[Path]:
        return self.resolve(self.demand_file)

    def to_dict(self) -> Dict[str, Any]:
        values = asdict(self)
        values.pop("base_dir")
        return values

    def with_overrides(self, **overrides) -> "ScenarioConfig":
        """Copy with some keys replaced, validated like a loaded file"""
        unknown = sorted(set(overrides) - set(DEFAULTS))
        if unknown:
            raise ScenarioConfigError([f"unknown key '{k}'" for k in unknown], self.name)
        updated = replace(self, **overrides)
        problems = validate_scenario(updated)
        if problems:
            raise ScenarioConfigError(problems, self.name)
        return updated


# ============================================================================
# VALIDATION
# ============================================================================

def _check_types(values: Dict[str, Any]) -> List[str]:
    problems = []
    for key, value in values.items():
        if key in BOOL_KEYS:
            ok = isinstance(value, bool)
            expected = "a boolean"
        elif key in INT_KEYS:
            ok = isinstance(value, int) and not isinstance(value, bool)
            expected = "an integer"
        elif key in OPTIONAL_INT_KEYS:
            ok = value is None or (isinstance(value, int) and not isinstance(value, bool))
            expected = "an integer or null"
        elif key in STR_KEYS:
            ok = isinstance(value, str)
            expected = "a string"
        elif key in OPTIONAL_STR_KEYS:
            ok = value is None or isinstance(value, str)
            expected = "a path or null"
        elif key in OPTIONAL_FLOAT_KEYS:
            ok = value is None or (isinstance(value, (int, float)) and not isinstance(value, bool))
            expected = "a number or null"
        else:
            ok = isinstance(value, (int, float)) and not isinstance(value, bool)
            expected = "a number"
        if ok and isinstance(value, float) and not math.isfinite(value):
            ok = False
        if not ok:
            problems.append(f"'{key}' must be {expected}, got {value!r}")
    return problems


def validate_scenario(cfg: ScenarioConfig) -> List[str]:
    """
    Check value ranges and cross-key consistency.

    Returns:
        List of problems, empty when the scenario is valid
    """
    problems = []

    def require(condition: bool, message: str):
        if not condition:
            problems.append(message)

    require(cfg.horizon_days >= 0, "'horizon_days' must be >= 0")
    require(cfg.seed >= 0, "'seed' must be >= 0")
    require(cfg.travelers >= 0, "'travelers' must be >= 0")
    require(cfg.drivers >= 0, "'drivers' must be >= 0")

    if cfg.network_file is None:
        require(cfg.grid_rows >= 2 and cfg.grid_cols >= 2, "grid needs at least 2x2 nodes")
        require(cfg.grid_edge_m > 0, "'grid_edge_m' must be positive")
        require(cfg.speed_mps > 0, "'speed_mps' must be positive")
    else:
        require(cfg.network_path.is_file(), f"network file '{cfg.network_path}' not found")
    if cfg.demand_file is not None:
        require(cfg.demand_path.is_file(), f"demand file '{cfg.demand_path}' not found")
    require(cfg.apsp_node_threshold >= 0, "'apsp_node_threshold' must be >= 0")

    require(cfg.shift_hours > 0, "'shift_hours' must be positive")
    require(cfg.reservation_wage_eur_per_h > 0, "'reservation_wage_eur_per_h' must be positive")

    for key in ("learning_rate_e", "learning_rate_wom", "learning_rate_m"):
        require(getattr(cfg, key) > 0, f"'{key}' must be positive")
    betas = (cfg.beta_e, cfg.beta_wom, cfg.beta_m)
    require(min(betas) >= 0, "utility weights must be non-negative")
    require(abs(sum(betas) - 1.0) <= 1e-9, "'beta_e' + 'beta_wom' + 'beta_m' must equal 1")
    require(cfg.mu > 0 and cfg.mu_nest > 0, "'mu' and 'mu_nest' must be positive")
    require(cfg.mu <= cfg.mu_nest, "'mu' must not exceed 'mu_nest'")
    require(cfg.value_of_time_eur_per_h >= 0, "'value_of_time_eur_per_h' must be >= 0")
    require(cfg.wait_multiplier >= 0, "'wait_multiplier' must be >= 0")
    require(cfg.pt_speed_mps > 0, "'pt_speed_mps' must be positive")
    require(cfg.pt_fare_eur >= 0, "'pt_fare_eur' must be >= 0")
    require(cfg.pt_access_s >= 0, "'pt_access_s' must be >= 0")
    require(cfg.pt_fare_eur > 0 or cfg.pt_access_s > 0 or cfg.value_of_time_eur_per_h > 0,
            "public transport generalized cost must be positive")
    require(0 <= cfg.marketing_reach <= 1, "'marketing_reach' must lie in [0, 1]")
    require(0 <= cfg.marketing_signal <= 1, "'marketing_signal' must lie in [0, 1]")
    require(cfg.wom_meetings_per_agent >= 0, "'wom_meetings_per_agent' must be >= 0")

    require(0 <= cfg.commission <= 1, "'commission' must lie in [0, 1]")
    require(cfg.fixed_cost_eur >= 0, "'fixed_cost_eur' must be >= 0")
    require(cfg.min_wage_eur_per_h is None or cfg.min_wage_relative_to_rw is None,
            "set only one of 'min_wage_eur_per_h' and 'min_wage_relative_to_rw'")
    if cfg.min_wage is not None:
        require(cfg.min_wage > 0, "minimum wage must be positive")
    require(cfg.loyalty_window_days >= 1, "'loyalty_window_days' must be >= 1")
    require(cfg.driver_traveler_ratio >= 1, "'driver_traveler_ratio' must be >= 1")
    require(0 <= cfg.initial_demand_share <= 1, "'initial_demand_share' must lie in [0, 1]")

    try:
        grid = cfg.fare_grid
        require(grid.on_grid(cfg.initial_fare), f"'initial_fare' {cfg.initial_fare} is not on the fare grid")
    except ValueError as e:
        problems.append(str(e))
    require(cfg.turnover_days >= 1, "'turnover_days' must be >= 1")
    require(cfg.first_turn_day is None or cfg.first_turn_day >= 0, "'first_turn_day' must be >= 0")
    require(cfg.equilibrium_stay_turns >= 1, "'equilibrium_stay_turns' must be >= 1")

    require(cfg.rollout_workers >= 1, "'rollout_workers' must be >= 1")
    require(cfg.summary_window_days >= 1, "'summary_window_days' must be >= 1")
    return problems


def scenario_from_dict(values: Dict[str, Any], base_dir: Optional[Union[str, Path]] = None,
                       source: Optional[str] = None) -> ScenarioConfig:
    """
    Build and validate a scenario from a mapping of keys.

    Raises:
        ScenarioConfigError: listing every problem found
    """
    if not isinstance(values, dict):
        raise ScenarioConfigError(["scenario must be a mapping of keys to values"], source)
    problems = [f"unknown key '{k}'" for k in sorted(set(values) - set(DEFAULTS))]
    known = {k: v for k, v in values.items() if k in DEFAULTS}
    problems += _check_types(known)
    if problems:
        raise ScenarioConfigError(problems, source)

    cfg = ScenarioConfig(**known, base_dir=str(base_dir) if base_dir is not None else None)
    problems = validate_scenario(cfg)
    if problems:
        raise ScenarioConfigError(problems, source)
    if cfg.lockout and not cfg.regulated:
        logger.warning("Scenario %s enables lockout without minimum-wage regulation; lockout is ignored",
                       cfg.name)
    return cfg


def load_scenario(path: Union[str, Path]) -> ScenarioConfig:
    """
    Read a YAML scenario file.

    Args:
        path: Scenario file; relative file keys resolve against its directory

    Returns:
        Validated ScenarioConfig
    """
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            values = yaml.safe_load(f)
    except OSError as e:
        raise ScenarioConfigError([f"cannot read file: {e}"], str(path)) from e
    except yaml.YAMLError as e:
        raise ScenarioConfigError([f"not valid YAML: {e}"], str(path)) from e
    if values is None:
        values = {}
    if isinstance(values, dict) and "name" not in values:
        values["name"] = path.stem
    return scenario_from_dict(values, base_dir=path.parent, source=str(path))


def save_scenario(cfg: ScenarioConfig, path: Union[str, Path]) -> Path:
    """Write the fully resolved scenario, every key included"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(cfg.to_dict(), f, sort_keys=False)
    return path


SCENARIO_KEYS = tuple(f.name for f in fields(ScenarioConfig) if f.name != "base_dir")
