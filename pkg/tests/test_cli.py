import json
import subprocess
import sys

import pytest
import yaml

from radarsense.cli import main
from radarsense.pipeline import ScenarioConfig

SMALL = {
    "scenario": {"half_length": 10.0},
    "parameters": [{"name": "sys_loss", "min": 5.0, "max": 15.0}, {"name": "g_max", "min": 15.0, "max": 25.0}],
    "ns_per_param": 17,
    "interference": 2,
}


@pytest.fixture
def cfg(tmp_path):
    path = tmp_path / "small.yaml"
    path.write_text(yaml.safe_dump(SMALL))
    return str(path)


def test_scenario_generate_and_inspect(tmp_path, capsys):
    out = tmp_path / "traj.csv"
    assert main(["scenario", "--out", str(out)]) == 0
    assert main(["scenario", "--inspect", str(out)]) == 0
    info = json.loads(capsys.readouterr().out.split("\n", 1)[1])
    assert info["frames"] == 152 and info["dt"] == pytest.approx(ScenarioConfig().dt)
    assert 10 < info["range_min"] < info["range_max"] < 80


def test_scenario_requires_an_action(capsys):
    assert main(["scenario"]) == 2
    assert "error" in capsys.readouterr().err


def test_simulate_evaluate_round_trip(tmp_path, cfg, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", "--config", cfg, "--out", str(a)]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(b), "--param", "awg_noise_sd=4", "--run-id", "2"]) == 0
    capsys.readouterr()
    assert main(["evaluate", str(a), str(a)]) == 0
    same = json.loads(capsys.readouterr().out)
    assert same["max"] == 0.0
    assert main(["evaluate", str(b), str(a), "--k", "1"]) == 0
    diff = json.loads(capsys.readouterr().out)
    assert 0 <= diff["min"] <= diff["mean"] <= diff["max"]
    assert len(diff["per_frame_distance"]) > 0


def test_simulate_rejects_bad_param(tmp_path, cfg):
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "x.csv"), "--param", "g_max"]) == 2
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "x.csv"), "--param", "nope=1"]) == 2
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "x.csv"), "--param", "awg_noise_sd=-2"]) == 2


def test_sample_then_sensitivity(tmp_path, cfg, capsys):
    samples = tmp_path / "s.csv"
    assert main(["sample", "--config", cfg, "--out", str(samples)]) == 0
    rows = samples.read_text().splitlines()
    assert len(rows) == 1 + 34
    # synthetic outputs: y = sys_loss
    outputs = tmp_path / "y.csv"
    lines = ["run_id,y"] + [f"{i},{r.split(',')[0]}" for i, r in enumerate(rows[1:])]
    outputs.write_text("\n".join(lines) + "\n")
    capsys.readouterr()
    assert main(["sensitivity", "--samples", str(samples), "--outputs", str(outputs), "--interference", "2"]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["sys_loss"]["s_first"] == pytest.approx(1.0, abs=0.05)


def test_sensitivity_constant_output_exit_3(tmp_path, cfg):
    samples = tmp_path / "s.csv"
    main(["sample", "--config", cfg, "--out", str(samples)])
    outputs = tmp_path / "y.csv"
    outputs.write_text("run_id,y\n" + "".join(f"{i},1.0\n" for i in range(34)))
    assert main(["sensitivity", "--samples", str(samples), "--outputs", str(outputs), "--interference", "2"]) == 3


def test_sensitivity_bad_inputs_exit_2(tmp_path, cfg):
    samples = tmp_path / "s.csv"
    main(["sample", "--config", cfg, "--out", str(samples)])
    outputs = tmp_path / "y.csv"
    outputs.write_text("run_id,y\n0,1.0\n")
    args = ["sensitivity", "--samples", str(samples), "--outputs", str(outputs), "--interference", "2"]
    assert main(args) == 2
    assert main(args + ["--metric", "z"]) == 2
    assert main(["sensitivity", "--samples", str(tmp_path / "none.csv"), "--outputs", str(outputs)]) == 2


def test_run_writes_results(tmp_path, cfg, capsys):
    out = tmp_path / "res"
    assert main(["run", "--config", cfg, "--out", str(out), "--mode", "mean"]) == 0
    text = capsys.readouterr().out
    assert "34 runs" in text and "sys_loss" in text
    assert (out / "sensitivity_mean.json").is_file()


def test_bad_config_exit_2(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("mode: median\n")
    assert main(["run", "--config", str(bad)]) == 2


def test_experiment_failure_exit_3(tmp_path):
    data = dict(SMALL, parameters=[{"name": "sys_loss", "min": 150.0, "max": 160.0},
                                   {"name": "g_max", "min": 10.0, "max": 11.0}])
    path = tmp_path / "dark.yaml"
    path.write_text(yaml.safe_dump(data))
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "r")]) == 3


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "radarsense.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("scenario", "simulate", "evaluate", "sample", "sensitivity", "run"):
        assert cmd in res.stdout
