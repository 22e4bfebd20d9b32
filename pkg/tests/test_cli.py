import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from kikerr import cli, fitting, io
from kikerr import mattis_bardeen as mb

BUNDLED = ["device1.toml", "sweep_frequency.toml", "duffing.toml", "two_tone.toml", "loss.toml",
           "calibrate.toml", "telegraph.toml", "ringdown.toml"]
COMMAND_FOR = {"device1.toml": "design", "sweep_frequency.toml": "sweep", "duffing.toml": "duffing",
               "two_tone.toml": "two-tone", "loss.toml": "loss", "calibrate.toml": "calibrate",
               "telegraph.toml": "telegraph", "ringdown.toml": "ringdown"}


def run(tmp_path, command, config, *extra):
    out = tmp_path / "out"
    return cli.main([command, "--config", str(config), "--out", str(out), *extra]), out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_configs_run(tmp_path, name):
    code, out = run(tmp_path, COMMAND_FOR[name], name)
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == COMMAND_FOR[name]
    for fname, digest in manifest["outputs"].items():
        assert io.sha256_file(out / fname) == digest


@pytest.mark.parametrize("name", ["device1.toml", "sweep_frequency.toml", "two_tone.toml", "telegraph.toml"])
def test_deterministic_outputs(tmp_path, name):
    c1, o1 = run(tmp_path / "a", COMMAND_FOR[name], name)
    c2, o2 = run(tmp_path / "b", COMMAND_FOR[name], name)
    assert c1 == c2 == 0
    m1 = json.loads((o1 / "manifest.json").read_text())
    m2 = json.loads((o2 / "manifest.json").read_text())
    assert m1["outputs"] == m2["outputs"]
    assert m1["config_hash"] == m2["config_hash"]


def test_sweep_rows_and_scaling(tmp_path):
    code, out = run(tmp_path, "sweep", "sweep_frequency.toml")
    rows = read_csv(out / "sweep.csv")
    assert len(rows) == 12
    f = np.array([float(r["frequency_Hz"]) for r in rows])
    k = np.array([float(r["kerr_Hz"]) for r in rows])
    assert np.allclose(k / f ** 2, k[0] / f[0] ** 2, rtol=1e-10)
    assert all(r["finite"] == "1" for r in rows)


def test_sweep_parallel_matches_serial(tmp_path):
    _, o1 = run(tmp_path / "s", "sweep", "sweep_frequency.toml")
    _, o2 = run(tmp_path / "p", "sweep", "sweep_frequency.toml", "--workers", "3")
    assert (o1 / "sweep.csv").read_bytes() == (o2 / "sweep.csv").read_bytes()


def test_missing_tc_is_input_error(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("[material]\nthickness_nm = 14.0\nLs_pH_sq = 40.0\nJstar_MA_cm2 = 3.95\n"
                   "[wire]\nwidth_nm = 18.0\nlength_nm = 460.0\n[circuit]\nfrequency_GHz = 6.3\n")
    code, _ = run(tmp_path, "design", cfg)
    assert code == 2
    assert "material.Tc_K" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    code, _ = run(tmp_path, "design", tmp_path / "nope.toml")
    assert code == 2


def test_config_dir_environment(tmp_path, monkeypatch):
    d = tmp_path / "cfgs"
    d.mkdir()
    (d / "mine.toml").write_text(Path(io.resolve_config_path("device1.toml")).read_text())
    monkeypatch.setenv(io.CONFIG_DIR_ENV, str(d))
    code, out = run(tmp_path, "design", "mine.toml")
    assert code == 0
    rep = json.loads((out / "design.json").read_text())
    assert rep["kerr_shift_kHz"] == pytest.approx(194.74, rel=1e-4)


def test_malformed_csv_is_input_error(tmp_path):
    data = tmp_path / "trace.csv"
    data.write_text("frequency_hz,re,im\n1,2,3\n4,five,6\n")
    cfg = tmp_path / "fit.toml"
    cfg.write_text(f'[fit]\nkind = "resonance"\ninput = "{data.name}"\n')
    code, _ = run(tmp_path, "fit", cfg)
    assert code == 2


def test_unknown_fit_kind(tmp_path):
    cfg = tmp_path / "fit.toml"
    cfg.write_text('[fit]\nkind = "magic"\ninput = "x.csv"\n')
    assert run(tmp_path, "fit", cfg)[0] == 2


def test_fit_resonance_device7(tmp_path):
    f0, qi = 7.7e9, 3.5e4
    lw = 2 * f0 / qi
    f = np.linspace(f0 - 8 * lw, f0 + 8 * lw, 401)
    tr = fitting.synthesize_reflection(f, f0, qi, qi, 0.5 * np.exp(0.3j), 0.0, 30e-9, noise=0.01, rng=7)
    io.write_trace_csv(tmp_path / "trace.csv", tr)
    cfg = tmp_path / "fit.toml"
    cfg.write_text('[fit]\nkind = "resonance"\ninput = "trace.csv"\n')
    code, out = run(tmp_path, "fit", cfg)
    assert code == 0
    rep = json.loads((out / "fit.json").read_text())
    assert abs(rep["parameters"]["Qi"]["value"] / qi - 1) < 0.03
    assert len(read_csv(out / "residuals.csv")) == 401


def test_fit_resonance_garbage_is_fit_failure(tmp_path):
    f = np.linspace(7e9, 7.01e9, 50)
    vals = np.ones(50, dtype=complex)
    io.write_trace_csv(tmp_path / "trace.csv", fitting.MeasurementTrace("frequency_sweep", f, vals))
    cfg = tmp_path / "fit.toml"
    cfg.write_text('[fit]\nkind = "resonance"\ninput = "trace.csv"\n')
    assert run(tmp_path, "fit", cfg)[0] == 3


def test_fit_tc(tmp_path):
    T = np.linspace(0.5, 1.5, 11)
    f = 6e9 * (1 + mb.frequency_shift_curve(T, 0.9, 2.9, 6e9))
    io.write_csv(tmp_path / "tc.csv", ["temperature_K", "f0_Hz"], zip(T, f))
    cfg = tmp_path / "fit.toml"
    cfg.write_text('[fit]\nkind = "tc"\ninput = "tc.csv"\nalpha = 0.9\nfit_offset = true\n')
    code, out = run(tmp_path, "fit", cfg)
    assert code == 0
    rep = json.loads((out / "mb_fit.json").read_text())
    assert rep["parameters"]["Tc"]["value"] == pytest.approx(2.9, rel=1e-3)


def test_fit_kerr_and_sheet(tmp_path):
    n = np.linspace(0, 40, 9)
    io.write_csv(tmp_path / "k.csv", ["n_pump", "shift_hz"], zip(n, -123.5e3 * n))
    (tmp_path / "k.toml").write_text('[fit]\nkind = "kerr"\ninput = "k.csv"\n')
    code, out = run(tmp_path / "k", "fit", tmp_path / "k.toml")
    assert code == 0
    assert json.loads((out / "fit.json").read_text())["parameters"]["K"]["value"] == pytest.approx(123.5e3)
    l = np.array([4e-7, 8e-7, 1.2e-6])
    f = 1 / (2 * math.pi * np.sqrt(40e-12 * l / 38e-9 * 0.6e-12))
    io.write_csv(tmp_path / "s.csv", ["length_m", "f0_Hz"], zip(l, f))
    (tmp_path / "s.toml").write_text('[fit]\nkind = "sheet"\ninput = "s.csv"\ncapacitance_F = 0.6e-12\n'
                                     'width_m = 38e-9\n')
    code, out = run(tmp_path / "s", "fit", tmp_path / "s.toml")
    assert code == 0
    assert json.loads((out / "fit.json").read_text())["parameters"]["Ls"]["value"] == pytest.approx(40e-12)


def test_duffing_outputs(tmp_path):
    code, out = run(tmp_path, "duffing", "duffing.toml")
    rep = json.loads((out / "duffing.json").read_text())
    assert rep["bistable"]
    rows = read_csv(out / "duffing.csv")
    assert {r["branch_id"] for r in rows} == {"0", "1", "2"}


def test_loss_outputs(tmp_path):
    code, out = run(tmp_path, "loss", "loss.toml")
    rep = json.loads((out / "loss.json").read_text())
    assert rep["radiation"]["gamma_hz"] == pytest.approx(34e6 * 410e6 ** 2 / 10e9 ** 2, rel=1e-12)
    assert 12e3 <= rep["quasiparticle"]["gamma_hz"] <= 14e3


def test_json_has_no_nan(tmp_path):
    p = io.write_json(tmp_path / "x.json", {"a": float("nan"), "b": [float("inf"), 1.0]})
    assert json.loads(p.read_text()) == {"a": None, "b": [None, 1.0]}
