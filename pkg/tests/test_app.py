import pandas as pd

from app import main
from config import SCENARIO_DIR
from src.demand import load_demand
from src.network import load_network
from utils.constants import DAYS_FILE, SUMMARY_FILE


def write_scenario(tmp_path, text=""):
    path = tmp_path / "tiny.yaml"
    path.write_text("seed: 3\nhorizon_days: 6\ntravelers: 30\ndrivers: 6\ngrid_rows: 3\ngrid_cols: 3\n"
                    "grid_edge_m: 500.0\nturnover_days: 3\nsummary_window_days: 3\nrollout_workers: 1\n"
                    + text)
    return path


def test_validate_shipped_scenario(capsys):
    assert main(["validate", str(SCENARIO_DIR / "strong_no_lockout.yaml")]) == 0
    assert "valid" in capsys.readouterr().out


def test_invalid_scenario_exits_with_error(tmp_path, capsys):
    path = write_scenario(tmp_path, "min_wage: 12\n")
    assert main(["validate", str(path)]) == 2
    assert "unknown key 'min_wage'" in capsys.readouterr().err


def test_run_then_summarize(tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(write_scenario(tmp_path)), "--out", str(out), "--quiet", "--raw-logs"]) == 0
    assert len(pd.read_csv(out / DAYS_FILE)) == 12

    again = tmp_path / "again"
    assert main(["summarize", str(out / DAYS_FILE), "--window", "2", "--out", str(again)]) == 0
    table = pd.read_csv(again / SUMMARY_FILE)
    assert list(table['platform'].astype(str)) == ['0', '1', 'market']
    assert (table['window_days'] == 2).all()


def test_run_overrides(tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(write_scenario(tmp_path)), "--out", str(out), "--quiet",
                 "--days", "2", "--seed", "8"]) == 0
    assert sorted(pd.read_csv(out / DAYS_FILE)['day'].unique()) == [0, 1]


def test_generate_writes_loadable_inputs(tmp_path):
    assert main(["generate", "--rows", "3", "--cols", "4", "--travelers", "25",
                 "--network-dir", str(tmp_path), "--demand-dir", str(tmp_path)]) == 0
    network = load_network(tmp_path / "grid_3x4.csv")
    patterns = load_demand(tmp_path / "demand_25.csv", network)
    assert network.num_nodes == 12
    assert patterns.size == 25
