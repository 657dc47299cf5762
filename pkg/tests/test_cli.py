import json

import numpy as np
import pytest

from wgqed.cli import EXIT_CODES, main
from wgqed.scenario import PRESETS, build_scenario, preset_config, run_scenario

FAST = ["--override", "samples=201"]


def _csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    return header, np.loadtxt(path, delimiter=",", skiprows=1)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_write_outputs(tmp_path, name):
    assert main(["preset", name, "--out", str(tmp_path), *FAST]) == 0
    sc = build_scenario(preset_config(name))
    lead = ["t", "t_over_tau"] if sc.tau > 0 else ["t"]
    header, data = _csv(tmp_path / "dde.csv")
    assert header == lead + ["p1", "p2", "re_b1", "im_b1", "re_b2", "im_b2"]
    assert data.shape == (201, len(header))
    assert np.all(np.diff(data[:, 0]) > 0)
    header, data = _csv(tmp_path / "me.csv")
    assert header == lead + ["p1", "p2", "trace", "min_eig"]
    assert data.shape[0] == 201
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["name"] == name and summary["samples"] == 201


def test_config_round_trip_is_bit_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["preset", "offcenter-x", "--out", str(a), *FAST]) == 0
    assert main(["run", str(a / "config.json"), "--out", str(b)]) == 0
    for f in ("dde.csv", "me.csv"):
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_rates_command(capsys, ref):
    assert main(["rates", "centered-12"]) == 0
    d12 = json.loads(capsys.readouterr().out)
    assert d12["gamma11"] == pytest.approx(ref["gamma11"], rel=1e-12)
    assert d12["tau1"] == pytest.approx(ref["tau_12"], rel=1e-12)
    assert d12["phase_k10_d"] == pytest.approx(12.0)
    assert [m["label"] for m in d12["modes"]] == ["TM11", "TM21"]
    assert [m["label"] for m in d12["evanescent_modes"]] == ["TM31"]
    assert main(["rates", "centered-24"]) == 0
    d24 = json.loads(capsys.readouterr().out)
    assert d24["tau1"] == pytest.approx(2 * d12["tau1"], rel=1e-12)


def test_perp_y_summary(tmp_path):
    res = run_scenario(preset_config("perp-y"), tmp_path)
    ds = res.summary["derived"]["dark_state"]
    assert ds["predicted_ratio"] == pytest.approx(0.5, abs=1e-12)
    for eng in ("dde", "me"):
        assert res.summary["checks"][f"{eng}_p_inf"] == pytest.approx([1 / 9, 2 / 9], abs=1e-4)
        assert res.summary["checks"][f"{eng}_steady_ratio"] == pytest.approx(0.5, abs=1e-3)


def _write(tmp_path, cfg):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return str(p)


@pytest.mark.parametrize(
    "cfg, category",
    [
        ({"atoms": [{"x": 0.5, "y": 0.25}, {"x": 1.5, "y": 0.25}]}, "geometry"),
        ({"omega_a": 5.0}, "cutoff"),
        ({"bogus": 1}, "config"),
        ({"coupling_scale": 0.08, "rates": {"gamma11": 1, "tau1": 1, "phase": 0}}, "config"),
        ({"engines": ["oracle"], "separation_k10": 12, "oracle": {"n": 11}, "t_end": 50}, "numerics"),
    ],
)
def test_error_exit_codes(tmp_path, capsys, cfg, category):
    assert main(["run", _write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == EXIT_CODES[category]
    assert f"error [{category}]" in capsys.readouterr().err


def test_missing_and_malformed_config(tmp_path):
    assert main(["run", str(tmp_path / "nope.json")]) == EXIT_CODES["config"]
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["run", str(bad)]) == EXIT_CODES["config"]


def test_explicit_rate_config(tmp_path):
    cfg = {"rates": {"gamma11": 1.0, "tau1": 1.0, "phase": 0.0}, "t_end": 3.0, "samples": 301}
    assert main(["run", _write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 0
    _, data = _csv(tmp_path / "o" / "dde.csv")
    t, p1 = data[:, 0], data[:, 2]
    m = t <= 2.0
    assert np.abs(p1[m] - np.exp(-2 * t[m])).max() <= 1e-8


def test_override_and_dump(capsys):
    assert main(["preset", "perp-y", "--override", "atoms.1.y=0.3", "--override", 'engines=["dde"]', "--dump"]) == 0
    cfg = json.loads(capsys.readouterr().out)
    assert cfg["atoms"][1]["y"] == 0.3 and cfg["engines"] == ["dde"]
