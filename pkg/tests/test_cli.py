import json
import math
from pathlib import Path

import numpy as np
import pytest

from hexkpp import __version__, cli
from hexkpp.io import read_csv

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def rows_of(path):
    return read_csv(path)[1]


def test_speed_curve_single_angle(tmp_path):
    out = tmp_path / "one.csv"
    assert cli.main(["speed-curve", "--alpha-start", "0", "--alpha-end", "0",
                     "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header == ["alpha", "c_star", "lambda_star"]
    assert len(rows) == 1
    assert float(rows[0][1]) == pytest.approx(4.627193523, abs=1e-8)


def test_degrees_convert_on_input(tmp_path):
    out = tmp_path / "deg.csv"
    assert cli.main(["speed-curve", "--degrees", "--alpha-start", "0", "--alpha-end", "90",
                     "--alpha-step", "30", "--out", str(out)]) == 0
    alphas = [float(r[0]) for r in rows_of(out)]
    assert alphas == pytest.approx([0, math.pi / 6, math.pi / 3])
    manifest = json.loads((tmp_path / "deg.manifest.json").read_text())
    assert manifest["params"]["alpha_step"] == pytest.approx(math.pi / 6)


def test_manifest_contents(tmp_path):
    out = tmp_path / "c.csv"
    cli.main(["speed-curve", "--alpha-end", "0.1", "--alpha-step", "0.05", "--seed", "17",
              "--out", str(out)])
    m = json.loads((tmp_path / "c.manifest.json").read_text())
    assert m["subcommand"] == "speed-curve"
    assert m["version"] == __version__
    assert m["seed"] == 17
    assert m["outputs"][0] == str(out)
    assert m["duration_s"] >= 0
    assert set(m["params"]) == set(cli.SPEED_CURVE)


def test_config_overrides_flags(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("fprime0 = 1\nalpha-end = 0\n")
    out = tmp_path / "c.csv"
    assert cli.main(["speed-curve", "--fprime0", "10", "--config", str(cfg),
                     "--out", str(out)]) == 0
    assert float(rows_of(out)[0][1]) == pytest.approx(1.0942248, abs=1e-6)


def test_unknown_config_key_is_usage_error(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("speed = 3\n")
    assert cli.main(["phi", "--config", str(cfg), "--out", str(tmp_path / "p.csv")]) == 1


@pytest.mark.parametrize("argv", [[], ["nope"], ["speed-curve", "--alpha-step", "0"],
                                  ["phi", "--n-max", "-1"], ["speed-curve", "--fprime0", "x"]])
def test_usage_errors(argv, tmp_path):
    extra = ["--out", str(tmp_path / "x.csv")] if len(argv) > 1 else []
    assert cli.main(argv + extra) == 1


def test_phi_rows(tmp_path):
    out = tmp_path / "phi.csv"
    assert cli.main(["phi", "--n-max", "20", "--extra-n", "3,7", "--alpha-step", "0.1",
                     "--out", str(out)]) == 0
    rows = rows_of(out)
    ns = sorted({int(r[1]) for r in rows})
    assert ns == [1, 2, 3, 4, 7, 20]
    per_n = len(rows) // len(ns)
    assert per_n == math.ceil(2 * math.pi / 0.1)
    ones = [abs(float(r[2])) for r in rows if r[1] == "1"]
    assert max(ones) <= 1e-13
    inner = [float(r[2]) for r in rows if int(r[1]) >= 2 and 0 < float(r[0]) < math.pi / 6]
    assert inner and max(inner) < 0


def test_square_single_angle(tmp_path):
    out = tmp_path / "sq.csv"
    assert cli.main(["square", "--beta-start", "45", "--beta-end", "45", "--degrees",
                     "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header == ["beta", "c_s_star", "nu_star"]
    assert len(rows) == 1


def test_square_quarter_period_pairs(tmp_path):
    out = tmp_path / "sq.csv"
    assert cli.main(["square", "--beta-step", str(math.pi / 36), "--out", str(out)]) == 0
    c = np.array([float(r[1]) for r in rows_of(out)])
    assert len(c) == 72
    assert np.max(np.abs(c[:-18] - c[18:])) <= 1e-10
    summary = json.loads((tmp_path / "sq.summary.json").read_text())
    assert [round(m["angle"] / (math.pi / 4)) for m in summary["minima"]] == [1, 3, 5, 7]
    assert [round(m["angle"] / (math.pi / 4)) for m in summary["maxima"]] == [0, 2, 4, 6]


def test_wave_outputs(tmp_path):
    out = tmp_path / "w.csv"
    assert cli.main(["wave", "--L", "30", "--h", "0.04", "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header == ["xi", "U"]
    side = json.loads((tmp_path / "w.json").read_text())
    assert side["residual_max"] <= 1e-3
    assert side["c"] == pytest.approx(1.1 * side["c_star"])
    xi = np.array([float(r[0]) for r in rows])
    u = np.array([float(r[1]) for r in rows])
    assert np.interp(0.0, xi, u) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("factor", ["1.0", "0.5"])
def test_wave_rejects_non_supercritical(factor, tmp_path, capsys):
    out = tmp_path / "w.csv"
    assert cli.main(["wave", "--c-factor", factor, "--out", str(out)]) == 2
    assert "requires c > c*" in capsys.readouterr().err
    assert not out.exists()
    m = json.loads((tmp_path / "w.manifest.json").read_text())
    assert m["outputs"] == [] and m["exit_code"] == 2


def test_spread_zero_config_is_partial(tmp_path):
    out = tmp_path / "zero"
    assert cli.main(["spread", "--config", str(CONFIGS / "zero.cfg"), "--out", str(out)]) == 3
    m = json.loads((out / "manifest.json").read_text())
    assert m["details"]["partial"] is True
    assert rows_of(out / "speeds.csv") == []


def test_spread_small_run_with_snapshots(tmp_path):
    out = tmp_path / "s"
    assert cli.main(["spread", "--R", "24", "--rings", "5,10,20", "--t-max", "2",
                     "--snapshot-every", "400", "--out", str(out)]) == 0
    header, rows = read_csv(out / "speeds.csv")
    assert header == ["alpha", "n", "cbar", "c_star"]
    assert len(rows) == 48
    header, rows = read_csv(out / "crossings.csv")
    assert header == ["ray_alpha", "ring_n", "i", "j", "x", "y", "t_cross"]
    snaps = sorted((out / "snapshots").iterdir())
    assert len(snaps) >= 2
    lines = snaps[0].read_text().splitlines()
    assert lines[0] == "t,R" and len(lines) == 2 + 49


@pytest.mark.parametrize("argv", [
    ["speed-curve", "--alpha-end", "1", "--alpha-step", "0.01"],
    ["phi", "--n-max", "4"],
    ["square", "--beta-end", "1"],
    ["wave", "--L", "20", "--h", "0.05", "--tol", "1e-6"],
])
def test_replay_reproduces_bytes(argv, tmp_path):
    first = tmp_path / "a.csv"
    assert cli.main(argv + ["--out", str(first)]) == 0
    second = tmp_path / "b.csv"
    assert cli.main(["replay", str(tmp_path / "a.manifest.json"), "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_replay_spread(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["spread", "--R", "24", "--rings", "5,10,20", "--t-max", "2",
                     "--out", str(a)]) == 0
    assert cli.main(["replay", str(a / "manifest.json"), "--out", str(b)]) == 0
    for name in ("crossings.csv", "speeds.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_replay_rejects_bad_manifest(tmp_path):
    bad = tmp_path / "m.json"
    bad.write_text(json.dumps({"subcommand": "dance", "params": {}}))
    assert cli.main(["replay", str(bad)]) == 1


def test_desk_config_file_parses():
    from hexkpp.hexsim import SimConfig
    cfg = SimConfig.from_file(CONFIGS / "desk.cfg")
    assert (cfg.a, cfg.R, cfg.rings, cfg.dt) == (200.0, 120, (5, 10, 20, 60), 5e-4)
    full = SimConfig.from_file(CONFIGS / "full.cfg")
    assert (full.R, full.rings) == (200, (5, 10, 20, 80))
