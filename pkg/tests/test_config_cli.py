import json
import subprocess
import sys

import pytest

from mvsde.cli import main, run_experiment
from mvsde.config import ConfigError, ExperimentConfig, parse_config


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------


def test_defaults_parse():
    cfg = parse_config("")
    assert cfg.model == "ou"
    assert cfg.checks == ()
    assert cfg.dt == pytest.approx(1e-3)


def test_full_config():
    cfg = parse_config(
        """
        # comment
        model = cubic_mf
        model.kappa = 0.25
        seed = 42
        grid.t1 = 2.0
        grid.n_steps = 100
        checks = gamma_identity, dini_gate
        coupling.dt_list = 0.01, 0.001
        emit_svg = true
        """
    )
    assert cfg.model == "cubic_mf"
    assert cfg.model_params == {"kappa": 0.25}
    assert cfg.seed == 42
    assert cfg.checks == ("gamma_identity", "dini_gate")
    assert cfg.coupling_dt_list == (0.01, 0.001)
    assert cfg.emit_svg is True


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="grid.nsteps"):
        parse_config("grid.nsteps = 10")


def test_malformed_value_names_key():
    with pytest.raises(ConfigError, match="grid.n_steps"):
        parse_config("grid.n_steps = soon")


def test_invalid_ranges_rejected():
    with pytest.raises(ConfigError):
        parse_config("grid.t1 = -1.0")
    with pytest.raises(ConfigError):
        parse_config("harnack.p_grid = 0.5, 2.0")
    with pytest.raises(ConfigError):
        ExperimentConfig(seed=-5)
    with pytest.raises(ConfigError, match="metrics.k"):
        parse_config("metrics.k = 5.0")
    assert parse_config("metrics.k = 3.0").metrics_k == 3.0


# ---------------------------------------------------------------------------
# experiment runner
# ---------------------------------------------------------------------------


def test_empty_check_list(tmp_path):
    cfg = ExperimentConfig(out=str(tmp_path / "o"), checks=())
    assert run_experiment(cfg) == 0
    body = (tmp_path / "o" / "results.csv").read_text()
    assert body.splitlines() == ["check,metric,value,param,seed,dt,n,resolution"]
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary == []


def test_gamma_identity_run(tmp_path):
    cfg = ExperimentConfig(out=str(tmp_path / "o"), checks=("gamma_identity",), seed=5)
    assert run_experiment(cfg) == 0
    lines = (tmp_path / "o" / "results.csv").read_text().splitlines()
    assert len(lines) >= 2
    row = dict(zip(lines[0].split(","), lines[1].split(",")))
    assert row["check"] == "gamma_identity"
    assert float(row["value"]) < 1e-12
    assert row["seed"] == "5"


def test_rerun_identical_and_thread_independent(tmp_path):
    outs = []
    for threads, name in ((1, "a"), (3, "b"), (1, "c")):
        cfg = ExperimentConfig(
            out=str(tmp_path / name),
            checks=("gamma_identity", "wasserstein_exact"),
            seed=11,
            threads=threads,
        )
        run_experiment(cfg)
        outs.append((tmp_path / name / "results.csv").read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_svg_emission(tmp_path):
    cfg = ExperimentConfig(
        out=str(tmp_path / "o"),
        checks=("stability",),
        seed=3,
        emit_svg=True,
        stability_n=500,
        resolution=32,
    )
    run_experiment(cfg)
    svgs = list((tmp_path / "o").glob("*.svg"))
    assert svgs, "expected at least one rendered SVG"
    assert svgs[0].read_text().lstrip().startswith("<?xml")


# ---------------------------------------------------------------------------
# CLI surface
# ---------------------------------------------------------------------------


def test_cli_list_commands(capsys):
    assert main(["list-models"]) == 0
    out = capsys.readouterr().out
    assert "ou" in out and "cubic" in out
    assert main(["list-checks"]) == 0
    out = capsys.readouterr().out
    assert "gamma_identity" in out


def test_cli_verify_model(capsys):
    assert main(["verify-model", "ou"]) == 0
    assert "pass" in capsys.readouterr().out
    assert main(["verify-model", "nope"]) == 2


def test_cli_usage_errors(tmp_path, capsys):
    assert main(["run"]) == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("grid.n_steps = soon\n")
    assert main(["run", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "grid.n_steps" in err
    assert not (tmp_path / "results.csv").exists()
    missing = main(["run", str(tmp_path / "nope.cfg")])
    assert missing == 2
    cfg = tmp_path / "c.cfg"
    cfg.write_text("checks = not_a_check\n")
    assert main(["run", str(cfg)]) == 2


def test_cli_run_subprocess(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(f"checks = variation_duality\nseed = 9\nout = {tmp_path / 'o'}\n")
    r = subprocess.run(
        [sys.executable, "-m", "mvsde.cli", "run", str(cfg), "--seed", "10"],
        capture_output=True,
        text=True,
    )
    assert r.returncode == 0, r.stderr
    assert "[pass] variation_duality" in r.stdout
    body = (tmp_path / "o" / "results.csv").read_text()
    assert ",10," in body  # the flag overrides the config seed
    meta = json.loads((tmp_path / "o" / "meta.json").read_text())
    assert meta["seed"] == 10
