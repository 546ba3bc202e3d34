import subprocess
import sys

import pytest

from wftune.cli import main


def run_cli(*argv):
    return main([str(a) for a in argv])


def test_validate_config_defaults(capsys):
    assert run_cli("validate-config") == 0
    out = capsys.readouterr().out
    for token in ("Rs: 12.85", "Rr: 4.8", "Lls: 0.07993", "LM: 0.6817", "Jm: 0.02", "P: 3", "Vdc: 300.0"):
        assert token in out


def test_unknown_verb_exits_1_with_usage():
    p = subprocess.run([sys.executable, "-m", "wftune.cli", "frobnicate"], capture_output=True, text=True)
    assert p.returncode == 1 and "usage:" in p.stderr


def test_config_required(capsys):
    assert run_cli("run") == 1
    assert "--config" in capsys.readouterr().err


def test_config_error_names_key(config_dir, tmp_path, capsys):
    assert run_cli("run", "--config", config_dir / "default.yaml", "--set", "tuner.gamma9_ref=1",
                   "--out", tmp_path) == 1
    assert "tuner.gamma9_ref" in capsys.readouterr().err


def test_simulation_fault_exit_2(config_dir, tmp_path, capsys):
    code = run_cli("run", "--config", config_dir / "default.yaml", "--out", tmp_path,
                   "--set", "machine.Ts=0.05", "--set", "plant.integrator=euler",
                   "--set", "plant.substeps=1", "--set", "scenario.duration=100")
    assert code == 2
    assert "last good sample at t=" in capsys.readouterr().err


def test_run_writes_csvs_and_manifest(config_dir, tmp_path):
    out = tmp_path / "r"
    assert run_cli("run", "--config", config_dir / "default.yaml", "--out", out,
                   "--set", "scenario.duration=0.05") == 0
    assert {p.name for p in out.iterdir()} == {"samples.csv", "blocks.csv", "manifest.yaml"}
    manifest = (out / "manifest.yaml").read_text()
    assert "verb: run" in manifest and "scenario.duration=0.05" in manifest
    assert "duration: 0.05" in manifest


def test_step_ref_gamma2_settles(config_dir, tmp_path):
    out = tmp_path / "s"
    assert run_cli("step-ref", "--config", config_dir / "step_ref_gamma2.yaml", "--out", out) == 0
    rows = [r.split(",") for r in (out / "blocks.csv").read_text().splitlines()[1:]]
    tail = [float(r[2]) for r in rows[-10:]]
    assert all(abs(g - 0.030) < 0.003 for g in tail)


def test_step_wf_and_pareto_verbs(config_dir, tmp_path, capsys):
    assert run_cli("step-wf", "--config", config_dir / "step_wf_A.yaml", "--out", tmp_path / "w",
                   "--set", "experiments.step_wf.duration=0.7",
                   "--set", "experiments.step_wf.t_step=0.3456") == 0
    assert "gamma2" in capsys.readouterr().out
    assert (tmp_path / "w" / "summary.csv").exists()
    assert run_cli("pareto-sweep", "--config", config_dir / "pareto.yaml", "--out", tmp_path / "p",
                   "--set", "experiments.pareto.lambda_xy=[0.2, 0.8]",
                   "--set", "experiments.pareto.lambda_sc=[0.002]",
                   "--set", "experiments.pareto.duration=0.3", "--jobs", "2") == 0
    assert len((tmp_path / "p" / "pareto.csv").read_text().splitlines()) == 3


def test_plot_flag_renders_pngs(config_dir, tmp_path):
    pytest.importorskip("matplotlib")
    out = tmp_path / "rev"
    assert run_cli("reversal", "--config", config_dir / "reversal.yaml", "--out", out, "--plot",
                   "--set", "experiments.reversal.duration=0.3",
                   "--set", "experiments.reversal.t_flip=0.15") == 0
    pngs = {p.relative_to(out).as_posix() for p in out.rglob("*.png")}
    assert {"speed_compare.png", "adaptive/indices.png", "fixed/currents.png"} <= pngs
    assert (out / "summary.csv").exists() and (out / "adaptive" / "blocks.csv").exists()
