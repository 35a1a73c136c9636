import dataclasses

import numpy as np
import pytest

from spinsoliton.experiments import (ConfigError, build_parser, exp_attraction, exp_freewave, load_config,
                                     main, write_csv)

SMALL = """
[grid]
N = 256
L = 80.0
support_rel = 1e-10

[time]
dt = 0.02
T_max = 4.0
sample_every = 5

[attract]
window = 1, 4
fixed_point_T = 1.0
"""


@pytest.fixture
def small_ini(tmp_path):
    def make(extra=""):
        p = tmp_path / "profile.ini"
        p.write_text(SMALL + extra)
        return str(p)
    return make


def test_default_profile():
    cfg = load_config()
    assert (cfg.N, cfg.L, cfg.dt, cfg.T_max) == (512, 160.0, 0.01, 40.0)
    assert cfg.M == pytest.approx(1 + np.pi)
    assert cfg.attract_window == (10.0, 40.0)
    assert len(cfg.hash) == 16 and cfg.hash == load_config().hash
    assert load_config(seed=3).hash != cfg.hash


def test_halved():
    cfg = load_config(quick=True)
    assert cfg.quick and cfg.N == 256 and cfg.dt == 0.02 and cfg.sample_every == 5
    assert cfg.support_rel == 1e-10 and cfg.scatter_ds == 0.05


def test_config_errors(tmp_path, small_ini):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.ini"))
    with pytest.raises(ConfigError, match="unknown key"):
        load_config(small_ini("[output]\nbogus = 1\n"))
    with pytest.raises(ConfigError):
        load_config(small_ini("[charge]\nname = nonsense\n"))
    with pytest.raises(ConfigError):
        load_config(small_ini("[attract]\nbeta = 2.0\n"))
    with pytest.raises(ConfigError):
        load_config(small_ini("[time]\nT_max = 30.0\n"))


def test_cli_exit_codes(tmp_path, small_ini, capsys):
    assert main(["attract", "--config", str(tmp_path / "nope.ini")]) == 2
    assert main(["attract", "--config", small_ini("[particle]\nI = -1\n")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["attract", "--frobnicate"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        build_parser().parse_args(["nonsense"])
    capsys.readouterr()


def test_soliton_data_run_passes(tmp_path, small_ini, capsys):
    out = tmp_path / "out"
    code = main(["attract", "--config", small_ini("[data]\neps = 0.0\n"), "--out", str(out)])
    text = capsys.readouterr().out
    assert code == 0, text
    assert "PASS  attract.soliton_error_floor" in text
    summary = (out / "summary.txt").read_text()
    assert summary.strip().endswith("overall=PASS")
    series = (out / "attract_series.csv").read_text().splitlines()
    cfg = load_config(small_ini("[data]\neps = 0.0\n"))
    assert series[0] == f"# spinsoliton csv v1 config={cfg.hash}"


def test_runs_are_deterministic(tmp_path, small_ini):
    ini = small_ini("[data]\njitter = 0.1\n")
    texts = []
    for i in range(2):
        out = tmp_path / f"o{i}"
        main(["attract", "--config", ini, "--out", str(out), "--seed", "7"])
        texts.append((out / "attract_series.csv").read_bytes())
    assert texts[0] == texts[1]


def test_seed_controls_jitter(small_ini):
    ini = small_ini("[data]\njitter = 0.1\n")
    d1 = load_config(ini, seed=1).data()
    d1b = load_config(ini, seed=1).data()
    d2 = load_config(ini, seed=2).data()
    assert (d1.a, d1.b) == (d1b.a, d1b.b)
    assert (d1.a, d1.b) != (d2.a, d2.b)
    assert abs(d1.a) <= 0.1 and abs(d1.b - 0.5) <= 0.1
    assert load_config(small_ini()).data().a == 0.0


def test_attraction_report_on_small_grid(small_ini):
    cfg = load_config(small_ini())
    rep = exp_attraction(cfg)
    assert rep.checks["soliton_fixed_point"]
    assert rep.metrics["kappa0_closed_form_error"] < 1e-12
    assert rep.metrics["energy_drift"] < 1e-8
    assert "attraction_rate" in rep.checks and "omega_error_exponent" in rep.metrics


def test_freewave_rejects_small_box(small_ini):
    cfg = dataclasses.replace(load_config(small_ini()), free_T=40.0)
    with pytest.raises(ConfigError):
        exp_freewave(cfg)


def test_csv_format(tmp_path):
    p = tmp_path / "x.csv"
    write_csv(p, ("t", "ok"), [(0.1, True), (2.0, False)], "abc")
    assert p.read_text().splitlines() == ["# spinsoliton csv v1 config=abc", "t,ok", "0.1,true", "2.0,false"]
