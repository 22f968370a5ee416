"""The pure-Python kernels must reproduce the compiled ones bit for bit."""

import os
import subprocess
import sys

import yaml

from followahead.scenario import scenario_dir


def simulate(scenario, out, disable):
    env = dict(os.environ)
    env.pop("FOLLOWAHEAD_DISABLE_NUMBA", None)
    if disable:
        env["FOLLOWAHEAD_DISABLE_NUMBA"] = "1"
    proc = subprocess.run(
        [sys.executable, "-m", "followahead.cli", "simulate", "--scenario", str(scenario), "--seed", "2", "--out", str(out)],
        env=env, capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr


def test_numba_flag():
    code = "import followahead._jit as j; print(j.NUMBA_ENABLED)"
    env = dict(os.environ, FOLLOWAHEAD_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True).stdout
    assert out.strip() == "False"


def test_python_path_matches_compiled(tmp_path):
    doc = yaml.safe_load((scenario_dir() / "circle-obstacles.yaml").read_text())
    doc["map"] = str(scenario_dir() / doc["map"])
    doc["duration"] = 3
    # without a wall-clock cap both paths run the same number of expansions
    doc["planner"] = {"time_budget": None}
    scenario = tmp_path / "s.yaml"
    scenario.write_text(yaml.safe_dump(doc))
    simulate(scenario, tmp_path / "jit.csv", disable=False)
    simulate(scenario, tmp_path / "py.csv", disable=True)
    assert (tmp_path / "jit.csv").read_bytes() == (tmp_path / "py.csv").read_bytes()
