import json
import os

import numpy as np
import pytest

from delaycomp import cli

BASE = """
plant = linear
plant.a = 1.0
plant.b = 1.0
plant.k = 2.0
X0 = 1.0
D = 0.5
schedule = sinusoid
schedule.base = 0.5
schedule.amplitude = 0.1
schedule.omega = 1.0
M = 20
dt = 0.005
T = 1.5
stride = 100
margin = 0.5
"""

EQUILIBRIUM = """
plant = linear
plant.a = 1.0
plant.b = 1.0
plant.k = 2.0
X0 = 0.0
D = 0.5
schedule = constant
schedule.value = 0.5
M = 16
dt = 0.002
T = 3.0
stride = 500
margin = 1.0
"""

UNSTABLE = """
plant = linear
plant.a = 1.0
plant.b = 1.0
plant.k = 0.0
X0 = 2.0
D = 0.5
schedule = constant
schedule.value = 0.5
M = 16
dt = 0.005
T = 25.0
stride = 1000000
margin = 1.0
"""


def write_cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_simulate_writes_run(tmp_path):
    cfg = write_cfg(tmp_path, BASE)
    out = tmp_path / "out"
    code = cli.main(["simulate", "--config", cfg, "--out", str(out)])
    assert code == 0
    lines = (out / "trajectory.csv").read_bytes().split(b"\r\n")
    assert len([l for l in lines if l]) == 1 + 300 + 1
    snaps = sorted(os.listdir(out / "snapshots"))
    assert "step_000100.csv" in snaps
    assert "step_000100.json" in snaps
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    assert manifest["config"]["M"] == 20
    assert manifest["versions"]["numpy"] == np.__version__


def test_simulate_env_out_root(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.ENV_OUT_ROOT, str(tmp_path / "root"))
    cfg = write_cfg(tmp_path, BASE)
    assert cli.main(["simulate", "--config", cfg]) == 0
    assert (tmp_path / "root" / "simulate" / "manifest.json").exists()


def test_simulate_bad_config_exit_2(tmp_path, capsys):
    cfg = write_cfg(tmp_path, BASE.replace("dt = 0.005", "dt = -1.0"))
    code = cli.main(["simulate", "--config", cfg,
                     "--out", str(tmp_path / "o")])
    assert code == 2
    assert "dt" in capsys.readouterr().err


def test_simulate_missing_config_exit_2(tmp_path):
    code = cli.main(["simulate", "--config", str(tmp_path / "none.cfg"),
                     "--out", str(tmp_path / "o")])
    assert code == 2


def test_simulate_blowup_exit_3(tmp_path):
    cfg = write_cfg(tmp_path, UNSTABLE)
    out = tmp_path / "o"
    code = cli.main(["simulate", "--config", cfg, "--out", str(out)])
    assert code == 3
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "blow-up"
    assert 0.0 < manifest["failure_time"] < 25.0


def test_simulate_numeric_fault_exit_4(tmp_path, monkeypatch):
    def broken(cfg):
        raise np.linalg.LinAlgError("singular transition system")
    monkeypatch.setattr(cli, "run_scenario", broken)
    cfg = write_cfg(tmp_path, BASE)
    code = cli.main(["simulate", "--config", cfg,
                     "--out", str(tmp_path / "o")])
    assert code == 4


def test_simulate_deterministic(tmp_path):
    cfg = write_cfg(tmp_path, BASE)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert cli.main(["simulate", "--config", cfg,
                         "--out", str(out)]) == 0
        outs.append((out / "trajectory.csv").read_bytes())
    assert outs[0] == outs[1]


def test_verify_equilibrium_exit_0(tmp_path, capsys):
    cfg = write_cfg(tmp_path, EQUILIBRIUM)
    out = tmp_path / "v"
    code = cli.main(["verify", "--config", cfg, "--out", str(out),
                     "--ladder", "16:0.002,32:0.001,64:0.0005"])
    assert code == 0
    assert "verify: ok" in capsys.readouterr().out
    report = json.loads((out / "report.json").read_text())
    assert report["passed"] is True
    assert report["slopes"]["state"] == "exact"
    assert (out / "report.txt").exists()
    assert (out / "convergence.csv").exists()


def test_verify_unreachable_slope_exit_5(tmp_path, capsys):
    cfg = write_cfg(tmp_path, EQUILIBRIUM.replace("X0 = 0.0", "X0 = 1.0")
                    .replace("T = 3.0", "T = 2.4")
                    .replace("stride = 500", "stride = 250"))
    out = tmp_path / "v"
    code = cli.main(["verify", "--config", cfg, "--out", str(out),
                     "--ladder", "16:0.002,32:0.001,64:0.0005",
                     "--slope-min", "99"])
    assert code == 5
    assert "FAIL" in capsys.readouterr().err


def test_verify_blowup_exit_3(tmp_path):
    cfg = write_cfg(tmp_path, UNSTABLE.replace("stride = 1000000",
                                               "stride = 100"))
    code = cli.main(["verify", "--config", cfg,
                     "--out", str(tmp_path / "v"),
                     "--ladder", "16:0.005,32:0.005,64:0.005"])
    assert code == 3


def test_verify_short_ladder_exit_2(tmp_path):
    cfg = write_cfg(tmp_path, EQUILIBRIUM)
    code = cli.main(["verify", "--config", cfg,
                     "--out", str(tmp_path / "v"), "--ladder", "16,32"])
    assert code == 2


def test_sweep_grid(tmp_path):
    cfg = write_cfg(tmp_path, BASE)
    out = tmp_path / "s"
    code = cli.main(["sweep", "--config", cfg, "--out", str(out),
                     "--set", "plant.k=1.5,2.0", "--set", "M=16,20"])
    assert code == 0
    lines = (out / "aggregate.csv").read_bytes().decode().strip().split("\r\n")
    assert lines[0] == "cell,plant.k,M,final_norm,max_residual,status"
    assert len(lines) == 5
    cells = [d for d in os.listdir(out) if d.startswith("cell_")]
    assert len(cells) == 4
    for cell in cells:
        assert (out / cell / "trajectory.csv").exists()
        assert (out / cell / "manifest.json").exists()


def test_sweep_worst_code_wins(tmp_path):
    cfg = write_cfg(tmp_path, UNSTABLE.replace("T = 25.0", "T = 22.0"))
    out = tmp_path / "s"
    code = cli.main(["sweep", "--config", cfg, "--out", str(out),
                     "--set", "plant.k=0.0,2.0"])
    assert code == 3
    lines = (out / "aggregate.csv").read_bytes().decode().strip().split("\r\n")
    statuses = {l.rsplit(",", 1)[-1] for l in lines[1:]}
    assert statuses == {"ok", "blow-up"}


def test_sweep_without_axes_exit_2(tmp_path):
    cfg = write_cfg(tmp_path, BASE)
    code = cli.main(["sweep", "--config", cfg, "--out", str(tmp_path / "s")])
    assert code == 2


def test_sweep_bad_axis_value_exit_2(tmp_path):
    cfg = write_cfg(tmp_path, BASE)
    code = cli.main(["sweep", "--config", cfg, "--out", str(tmp_path / "s"),
                     "--set", "dt="])
    assert code == 2
