"""Command-line interface: exit codes, outputs, determinism."""

import json
import subprocess
import sys

import pytest

from gridabs.abstraction import from_json
from gridabs.cli import main

CONFIG = """
grid:
  dimension: 2
  side: 0.0028284271247461903
network:
  agents: 3
  edges: [[0, 1], [1, 2]]
dynamics:
  builtin: saturated_consensus
  gain: 0.5
  input_bound: 0.5
discretization:
  period: {period}
run:
  substeps: 64
  trials: 30
  seed: 7
  window: [[-1, 1], [-1, 1]]
simulate:
  initial: [[0.001, 0.001], [0.0005, -0.002], [-0.002, 0.0015]]
  targets: [[0, 0], [0, -1], [-1, 0]]
controller_dump:
  agent: 1
  cells: [[0, -1], [0, 0], [-1, 0]]
"""


@pytest.fixture()
def config_path(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(CONFIG.format(period=0.02))
    return str(path)


@pytest.fixture()
def bad_period_path(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text(CONFIG.format(period=0.005))
    return str(path)


def test_check_prints_interval_and_passes(config_path, capsys):
    assert main(["check", "--config", config_path]) == 0
    out = capsys.readouterr().out
    assert "admissible interval" in out
    assert "admissible: yes" in out
    assert "0.0107986711" in out
    assert "0.0308679954" in out


def test_check_fails_below_interval(bad_period_path, capsys):
    assert main(["check", "--config", bad_period_path]) == 1
    out = capsys.readouterr().out
    assert "admissible: no" in out


def test_missing_config_is_an_input_error(tmp_path, capsys):
    assert main(["check", "--config", str(tmp_path / "nope.yaml")]) == 2


def test_malformed_config_is_an_input_error(tmp_path, capsys):
    path = tmp_path / "broken.yaml"
    path.write_text("grid: {dimension: 2}\n")
    assert main(["check", "--config", str(path)]) == 2


def test_region_rows_and_determinism(config_path, tmp_path, capsys):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    assert main(["region", "--config", config_path, "--samples", "25",
                 "--out", str(out1)]) == 0
    assert main(["region", "--config", config_path, "--samples", "25",
                 "--out", str(out2)]) == 0
    data1 = (out1 / "region.csv").read_bytes()
    data2 = (out2 / "region.csv").read_bytes()
    assert data1 == data2
    lines = data1.decode().strip().splitlines()
    assert lines[0] == "diameter,period_min,period_max,reach_line,input_line"
    assert len(lines) == 26
    for line in lines[1:]:
        d, lo, hi, reach, _ = map(float, line.split(","))
        assert lo >= reach


def test_abstract_writes_all_agents(config_path, tmp_path, capsys):
    out = tmp_path / "abs"
    assert main(["abstract", "--config", config_path, "--out", str(out)]) == 0
    for i, count in ((0, 81), (1, 729), (2, 81)):
        ts = from_json((out / f"transitions_agent{i}.json").read_text())
        assert ts.agent == i
        assert len(ts.transitions) == count
        dot = (out / f"transitions_agent{i}.dot").read_text()
        assert dot.startswith("digraph")
    # a second run produces identical bytes
    again = tmp_path / "abs2"
    assert main(["abstract", "--config", config_path, "--out", str(again)]) == 0
    assert ((out / "transitions_agent1.json").read_bytes()
            == (again / "transitions_agent1.json").read_bytes())


def test_abstract_without_window_is_an_input_error(config_path, tmp_path, capsys):
    text = CONFIG.format(period=0.02).replace("  window: [[-1, 1], [-1, 1]]\n", "")
    path = tmp_path / "nowin.yaml"
    path.write_text(text)
    assert main(["abstract", "--config", str(path)]) == 2


def test_verify_single_transition(config_path, capsys):
    assert main(["verify", "--config", config_path, "1:0", "--trials", "10"]) == 0
    out = capsys.readouterr().out
    assert "min margin" in out
    assert out.count("agent 1") == 1


def test_verify_bad_selector(config_path, capsys):
    assert main(["verify", "--config", config_path, "9"]) == 2
    assert main(["verify", "--config", config_path, "one:two"]) == 2


def test_verify_inadmissible_period_exits_one(bad_period_path, capsys):
    assert main(["verify", "--config", bad_period_path, "0:0"]) == 1


def test_simulate_writes_outputs(config_path, tmp_path, capsys):
    out = tmp_path / "sim"
    assert main(["simulate", "--config", config_path, "--out", str(out)]) == 0
    report = (out / "report.txt").read_text()
    assert "landed: true" in report
    assert "agent_2_containment: true" in report
    rows = (out / "trajectory.csv").read_text().strip().splitlines()
    assert rows[0] == "t,x0_0,x0_1,x1_0,x1_1,x2_0,x2_1"
    assert len(rows) == 66
    first = rows[1].split(",")
    assert float(first[0]) == 0.0
    assert float(first[1]) == pytest.approx(0.001)


def test_simulate_rejects_wrong_target(config_path, tmp_path, capsys):
    text = CONFIG.format(period=0.02).replace("[0, -1]", "[4, 4]")
    path = tmp_path / "wrong.yaml"
    path.write_text(text)
    assert main(["simulate", "--config", str(path)]) == 2


def test_controller_dump_columns(config_path, tmp_path, capsys):
    out = tmp_path / "dump"
    assert main(["controller-dump", "--config", config_path, "--out", str(out)]) == 0
    rows = (out / "controller_agent1.csv").read_text().strip().splitlines()
    assert rows[0] == "t,ref_0,ref_1,homing_0,homing_1,drift_bound"
    assert len(rows) == 66
    last = rows[-1].split(",")
    assert float(last[0]) == pytest.approx(0.02)
    assert float(last[-1]) == pytest.approx(0.0, abs=1e-15)


def test_validate_constants_passes(config_path, capsys):
    assert main(["validate-constants", "--config", config_path,
                 "--trials", "300"]) == 0
    out = capsys.readouterr().out
    assert "ok" in out


def test_enumeration_cap_exit_code(tmp_path, capsys):
    text = CONFIG.format(period=0.02).replace(
        "window: [[-1, 1], [-1, 1]]", "window: [[-60, 60], [-60, 60]]")
    path = tmp_path / "huge.yaml"
    path.write_text(text)
    assert main(["abstract", "--config", str(path), "--out", str(tmp_path)]) == 3


def test_console_entry_point(config_path):
    proc = subprocess.run([sys.executable, "-m", "gridabs.cli", "check",
                           "--config", config_path],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "admissible: yes" in proc.stdout
