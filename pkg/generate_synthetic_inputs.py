"""
Synthetic Input Generator for the Ride-Sourcing Market Simulator
Writes a grid road network and a matching demand file in the formats the
simulator reads (see README.md)

STANDALONE SCRIPT - also available as `python app.py generate`

Usage:
    python generate_synthetic_inputs.py --rows 5 --cols 5 --travelers 200

Output:
    - data/networks/grid_<rows>x<cols>.csv
    - data/demand/demand_<travelers>.csv
"""
import argparse
from pathlib import Path
from typing import Dict, Optional

import numpy as np

import config
from src.demand import save_demand, setup_travel_patterns
from src.network import generate_grid, save_network
from utils.rng import SETUP_DAY, RngPlan


class SyntheticInputGenerator:
    """Generate a grid network and uniform demand for it"""

    def __init__(self, rows: int, cols: int, edge_m: float, speed_mps: float,
                 travelers: int, shift_hours: float, seed: int):
        """
        Args:
            rows, cols: Grid size in nodes
            edge_m: Edge length in metres
            speed_mps: Vehicle speed written into the network header
            travelers: Number of travelers in the demand file
            shift_hours: Request times fall uniformly within this shift
            seed: Master seed
        """
        self.rows = rows
        self.cols = cols
        self.edge_m = edge_m
        self.speed_mps = speed_mps
        self.travelers = travelers
        self.shift_seconds = int(round(shift_hours * 3600))
        self.plan = RngPlan(seed)

    def generate(self, network_dir: Path, demand_dir: Path,
                 network_name: Optional[str] = None,
                 demand_name: Optional[str] = None) -> Dict[str, Path]:
        print(f"🗺️  Building {self.rows}x{self.cols} grid ({self.edge_m:.0f} m edges)...")
        network = generate_grid(self.rows, self.cols, self.edge_m, speed=self.speed_mps)

        print(f"🚶 Drawing {self.travelers} traveler trips...")
        patterns = setup_travel_patterns(network, self.travelers, self.plan.stream(SETUP_DAY, 'setup'))
        request_times = self.plan.stream(0, 'demand').integers(0, self.shift_seconds, size=self.travelers)

        network_path = save_network(
            network, Path(network_dir) / (network_name or f"grid_{self.rows}x{self.cols}.csv"))
        demand_path = save_demand(
            patterns, Path(demand_dir) / (demand_name or f"demand_{self.travelers}.csv"),
            request_times=np.asarray(request_times))
        print(f"   ✓ Saved: {network_path}")
        print(f"   ✓ Saved: {demand_path}")
        return {'network': network_path, 'demand': demand_path}


def build_parser(parser: Optional[argparse.ArgumentParser] = None) -> argparse.ArgumentParser:
    parser = parser or argparse.ArgumentParser(description="Generate a synthetic network and demand file")
    parser.add_argument("--rows", type=int, default=config.NETWORK_CONFIG["grid_rows"])
    parser.add_argument("--cols", type=int, default=config.NETWORK_CONFIG["grid_cols"])
    parser.add_argument("--edge-m", type=float, default=config.NETWORK_CONFIG["grid_edge_m"])
    parser.add_argument("--speed-mps", type=float, default=config.NETWORK_CONFIG["speed_mps"])
    parser.add_argument("--travelers", type=int, default=config.DEMAND_CONFIG["travelers"])
    parser.add_argument("--shift-hours", type=float, default=config.DEMAND_CONFIG["shift_hours"])
    parser.add_argument("--seed", type=int, default=config.SIMULATION_CONFIG["seed"])
    parser.add_argument("--network-dir", type=Path, default=config.NETWORK_DIR)
    parser.add_argument("--demand-dir", type=Path, default=config.DEMAND_DIR)
    return parser


def generate_from_args(args: argparse.Namespace) -> Dict[str, Path]:
    generator = SyntheticInputGenerator(
        rows=args.rows, cols=args.cols, edge_m=args.edge_m, speed_mps=args.speed_mps,
        travelers=args.travelers, shift_hours=args.shift_hours, seed=args.seed,
    )
    return generator.generate(args.network_dir, args.demand_dir)


if __name__ == "__main__":
    print("🚕 Ride-Sourcing Market Simulator - Synthetic Input Generator")
    print("=" * 60)
    args = build_parser().parse_args()

    print("\n📋 Configuration:")
    for key, value in vars(args).items():
        print(f"   • {key}: {value}")
    print()

    try:
        generate_from_args(args)
        print("\n✅ GENERATION COMPLETE!")
        print("=" * 60)
    except Exception as e:
        print(f"\n❌ Error: {e}")
        raise SystemExit(1)
