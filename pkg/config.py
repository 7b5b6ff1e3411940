"""
Configuration file for the Ride-Sourcing Market Simulator
"""
import os
from pathlib import Path
from dotenv import load_dotenv

from utils.constants import (
    COMMISSION_RATE,
    FIXED_COST_EUR_PER_DAY,
    RESERVATION_WAGE_EUR_PER_H,
    SHIFT_HOURS,
    TURNOVER_DAYS,
    UTILITY_WEIGHTS,
    VEHICLE_SPEED_MPS,
)

# Load environment variables
load_dotenv()

# Project paths
ROOT_DIR = Path(__file__).parent
DATA_DIR = ROOT_DIR / "data"
SCENARIO_DIR = DATA_DIR / "scenarios"
NETWORK_DIR = DATA_DIR / "networks"
DEMAND_DIR = DATA_DIR / "demand"
OUTPUT_DIR = Path(os.getenv("RIDESIM_OUTPUT_DIR", ROOT_DIR / "output"))

# Runtime settings
LOG_LEVEL = os.getenv("RIDESIM_LOG_LEVEL", "INFO").upper()
ROLLOUT_WORKERS = int(os.getenv("RIDESIM_ROLLOUT_WORKERS", "1"))

# Road network
NETWORK_CONFIG = {
    "grid_rows": 5,
    "grid_cols": 5,
    "grid_edge_m": 1000.0,
    "speed_mps": VEHICLE_SPEED_MPS,
    "network_file": None,
    "apsp_node_threshold": 2000,  # all-pairs table up to this many nodes
}

# Populations and demand
DEMAND_CONFIG = {
    "travelers": 200,
    "drivers": 20,
    "demand_file": None,
    "shift_hours": SHIFT_HOURS,
}

# Day-to-day behaviour
CHOICE_CONFIG = {
    "learning_rate_e": 1.0,
    "learning_rate_wom": 1.0,
    "learning_rate_m": 1.0,
    "initial_latent": 0.0,  # U = 0.5, neutral
    "beta_e": UTILITY_WEIGHTS["beta_e"],
    "beta_wom": UTILITY_WEIGHTS["beta_wom"],
    "beta_m": UTILITY_WEIGHTS["beta_m"],
    "asc_platform": 0.0,
    "asc_outside": 0.0,
    "outside_utility": 0.5,
    "mu": 1.0,
    "mu_nest": 2.0,
    "unaware_excluded": False,
    "value_of_time_eur_per_h": 10.0,
    "wait_multiplier": 2.0,
    "pt_speed_mps": 5.0,
    "pt_fare_eur": 1.5,
    "pt_access_s": 600.0,
    "reservation_wage_eur_per_h": RESERVATION_WAGE_EUR_PER_H,
    "marketing_reach": 0.02,
    "marketing_signal": 0.7,
    "wom_meetings_per_agent": 0.5,
}

# Platform economics and regulation
PLATFORM_CONFIG = {
    "commission": COMMISSION_RATE,
    "fixed_cost_eur": FIXED_COST_EUR_PER_DAY,
    "min_wage_eur_per_h": None,
    "min_wage_relative_to_rw": None,
    "lockout": False,
    "loyalty_window_days": 20,
    "driver_traveler_ratio": 10,
    "initial_demand_share": 0.0,
}

# Pricing game
GAME_CONFIG = {
    "fare_grid_min": 0.2,
    "fare_grid_max": 3.0,
    "fare_step": 0.2,
    "initial_fare": 1.4,
    "turnover_days": TURNOVER_DAYS,
    "first_turn_day": None,  # defaults to turnover_days
    "equilibrium_stay_turns": 2,
    "freeze_on_equilibrium": True,
}

# Simulation horizon
SIMULATION_CONFIG = {
    "horizon_days": 300,
    "seed": 42,
    "rollout_workers": ROLLOUT_WORKERS,
}

# Outputs
OUTPUT_CONFIG = {
    "summary_window_days": 50,
}
