"""Shared fixtures: small networks and fast scenarios"""
import pytest

from src.network import generate_grid
from src.scenario import scenario_from_dict

FAST_SCENARIO = {
    "name": "tiny",
    "seed": 3,
    "horizon_days": 12,
    "travelers": 40,
    "drivers": 8,
    "grid_rows": 3,
    "grid_cols": 3,
    "grid_edge_m": 500.0,
    "turnover_days": 4,
    "summary_window_days": 4,
    "marketing_reach": 0.3,
    "wom_meetings_per_agent": 1.0,
    "rollout_workers": 1,
}


def make_scenario(**overrides):
    return scenario_from_dict({**FAST_SCENARIO, **overrides})


@pytest.fixture
def grid3():
    return generate_grid(3, 3, 500.0, speed=10.0)


@pytest.fixture
def tiny_scenario():
    return make_scenario()


@pytest.fixture
def regulated_scenario():
    return make_scenario(name="tiny_regulated", min_wage_eur_per_h=12.0, lockout=True)
