import json
import os

import numpy as np
import pytest
import yaml

from levyfilter import io
from levyfilter.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, EXIT_WARN, main
from levyfilter.config import preset_text

SMALL = {
    "name": "small",
    "seed": 3,
    "model": {"epsilon": 0.5},
    "grid": {"x_min": -2.0, "x_max": 2.0, "dx": 0.1},
    "time": {"dt": 0.002, "T": 0.4},
    "observation": {"mode": "discrete", "spacing": 0.1},
    "solver": {"store_stride": 10},
}


def write_cfg(path, cfg):
    path.write_text(yaml.safe_dump(cfg))
    return str(path)


@pytest.fixture
def small_cfg(tmp_path):
    return write_cfg(tmp_path / "small.yaml", SMALL)


def run(*argv):
    return main([str(a) for a in argv])


def test_preset_twin_is_byte_identical_on_rerun(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run("twin", "--preset", "example1-discrete-alpha1.5", "--out", out, "--quiet") == EXIT_OK
    names = sorted(os.listdir(a))
    assert names == sorted(os.listdir(b))
    assert {"trajectory.csv", "observations.csv", "density.csv", "filter_events.csv",
            "orbit.csv", "events.csv", "truth_events.csv", "twin_report.json"} <= set(names)
    for n in names:
        if n != "manifest.json":
            assert (a / n).read_bytes() == (b / n).read_bytes(), n
    ma, mb = (json.loads((d / "manifest.json").read_text()) for d in (a, b))
    ma.pop("created"), mb.pop("created")
    assert ma == mb
    assert ma["config"]["model"]["alpha"] == 1.5 and ma["config"]["solver"]["inner_rule"] == "zeta"
    report = json.loads((a / "twin_report.json").read_text())
    assert report["sign_agreement"] >= 0.9 and report["matched"]


def test_fokker_planck_writes_only_density_outputs(tmp_path):
    out = tmp_path / "fp"
    cfg = write_cfg(tmp_path / "c.yaml", {**SMALL, "observation": {"mode": "none"}})
    assert run("fokker-planck", "--config", cfg, "--out", out, "--quiet") == EXIT_OK
    assert sorted(os.listdir(out)) == ["density.csv", "events.csv", "manifest.json", "orbit.csv"]
    evo = io.read_density(out / "density.csv")
    assert np.allclose(evo.times, np.arange(0, 0.40001, 0.02))
    assert evo.grid.n == 41


def test_twin_with_mode_none_is_a_pure_forecast(tmp_path):
    out = tmp_path / "tw"
    cfg = write_cfg(tmp_path / "c.yaml", {**SMALL, "observation": {"mode": "none"}})
    assert run("twin", "--config", cfg, "--out", out, "--quiet") == EXIT_OK
    assert "trajectory.csv" not in os.listdir(out)


def test_seed_and_stride_overrides(tmp_path, small_cfg):
    assert run("twin", "--config", small_cfg, "--seed", 11, "--stride", 5, "--out",
               tmp_path / "o", "--quiet") in (EXIT_OK, EXIT_WARN)
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["config"]["seed"] == 11 and man["config"]["solver"]["store_stride"] == 5
    assert io.read_meta(tmp_path / "o" / "trajectory.csv")["seed"] == 11


def test_different_seeds_give_different_truths(tmp_path, small_cfg):
    for s in (1, 2):
        run("simulate", "--config", small_cfg, "--seed", s, "--out", tmp_path / str(s), "--quiet")
    a = io.read_trajectory(tmp_path / "1" / "trajectory.csv")
    b = io.read_trajectory(tmp_path / "2" / "trajectory.csv")
    assert not np.array_equal(a.states, b.states)


def test_out_root_from_environment(tmp_path, small_cfg, monkeypatch):
    monkeypatch.setenv("LEVYFILTER_OUT", str(tmp_path / "root"))
    assert run("simulate", "--config", small_cfg, "--quiet") in (EXIT_OK, EXIT_WARN)
    assert os.listdir(tmp_path / "root") == ["small-seed3-simulate"]
    got = sorted(os.listdir(tmp_path / "root" / "small-seed3-simulate"))
    assert got == ["manifest.json", "observations.csv", "trajectory.csv"]


def test_self_compare(tmp_path, small_cfg):
    run("twin", "--config", small_cfg, "--out", tmp_path / "r", "--quiet")
    r = tmp_path / "r"
    assert run("compare", r, r, "--metric", "l1_density", "--out", tmp_path / "c", "--quiet") == EXIT_OK
    rep = json.loads((tmp_path / "c" / "compare_l1_density.json").read_text())
    assert rep["max"] == 0.0
    assert run("compare", r, r, "--metric", "orbit_sign_agreement", "--out", tmp_path / "c",
               "--quiet") == EXIT_OK
    assert json.loads((tmp_path / "c" / "compare_orbit_sign_agreement.json").read_text())["value"] == 1.0
    assert run("compare", r, r, "--metric", "event_match", "--out", tmp_path / "c", "--quiet") == EXIT_OK
    assert json.loads((tmp_path / "c" / "compare_event_match.json").read_text())["matched"]
    lines = (tmp_path / "c" / "compare_l1_density.csv").read_text().splitlines()
    assert lines[0].startswith("# ") and lines[1] == "t,l1"


def test_compare_axis_mismatch(tmp_path, small_cfg):
    run("fokker-planck", "--config", small_cfg, "--out", tmp_path / "a", "--quiet")
    run("fokker-planck", "--config", small_cfg, "--stride", 20, "--out", tmp_path / "b", "--quiet")
    assert run("compare", tmp_path / "a", tmp_path / "b", "--quiet") == EXIT_CONFIG
    assert run("compare", tmp_path / "a", tmp_path / "b", "--times", "0.2,0.4", "--quiet") == EXIT_OK
    assert run("compare", tmp_path / "a", tmp_path / "b", "--times", "0.1", "--quiet") == EXIT_CONFIG


def test_compare_grid_mismatch(tmp_path, small_cfg):
    cfg2 = write_cfg(tmp_path / "c2.yaml", {**SMALL, "grid": {"x_min": -2.0, "x_max": 2.0, "dx": 0.05}})
    run("fokker-planck", "--config", small_cfg, "--out", tmp_path / "a", "--quiet")
    run("fokker-planck", "--config", cfg2, "--out", tmp_path / "b", "--quiet")
    assert run("compare", tmp_path / "a", tmp_path / "b", "--quiet") == EXIT_CONFIG


def test_config_error_exit_code(tmp_path, capsys):
    bad = write_cfg(tmp_path / "bad.yaml", {"model": {"alfa": 1.0}})
    assert run("twin", "--config", bad, "--quiet") == EXIT_CONFIG
    assert "model.alfa: unknown key" in capsys.readouterr().err
    assert run("twin", "--preset", "no-such-preset") == EXIT_CONFIG
    assert run("twin") == EXIT_CONFIG
    assert run("twin", "--config", tmp_path / "missing.yaml") == EXIT_CONFIG


def test_numeric_error_exit_code(tmp_path, small_cfg):
    assert run("filter-zakai", "--config", small_cfg, "--out", tmp_path / "z", "--quiet") == EXIT_NUMERIC


def test_batch_runs_every_config(tmp_path):
    d = tmp_path / "batch"
    d.mkdir()
    for s in (1, 2):
        write_cfg(d / f"s{s}.yaml", {**SMALL, "name": f"b{s}", "seed": s})
    assert run("twin", "--batch", d, "--out", tmp_path / "out", "--workers", 2, "--quiet") in (EXIT_OK, EXIT_WARN)
    assert sorted(os.listdir(tmp_path / "out")) == ["b1-seed1-twin", "b2-seed2-twin"]


def test_dump_operator(tmp_path, small_cfg):
    run("fokker-planck", "--config", small_cfg, "--dump-operator", "--out", tmp_path / "o", "--quiet")
    lines = (tmp_path / "o" / "operator.csv").read_text().splitlines()
    assert len(lines) > 41
    assert "operator.csv" in json.loads((tmp_path / "o" / "manifest.json").read_text())["files"]


def test_presets_listing(capsys):
    assert run("presets") == EXIT_OK
    listed = capsys.readouterr().out.split()
    assert "example2-continuous-alpha1.5" in listed and "cauchy" in listed
    assert "seed" in preset_text("example1-discrete-alpha1.5")


def test_simulate_ensemble_matches_fokker_planck(tmp_path):
    cfg = write_cfg(tmp_path / "c.yaml", {
        **SMALL, "observation": {"mode": "none"}, "time": {"dt": 0.001, "T": 0.5},
        "grid": {"x_min": -2.5, "x_max": 2.5, "dx": 0.05}, "solver": {"store_stride": 250}})
    run("simulate", "--config", cfg, "--ensemble", 20000, "--out", tmp_path / "mc", "--quiet")
    run("fokker-planck", "--config", cfg, "--out", tmp_path / "fp", "--quiet")
    assert run("compare", tmp_path / "mc", tmp_path / "fp", "--out", tmp_path / "c", "--quiet") == EXIT_OK
    rep = json.loads((tmp_path / "c" / "compare_l1_density.json").read_text())
    assert len(rep["values"]) == 3
    assert rep["max"] < 0.1


def test_particle_engine(tmp_path, small_cfg):
    code = run("twin", "--config", small_cfg, "--engine", "particles", "--out", tmp_path / "p", "--quiet")
    assert code in (EXIT_OK, EXIT_WARN)
    man = json.loads((tmp_path / "p" / "manifest.json").read_text())
    assert man["engine"] == "particles"
    evo = io.read_density(tmp_path / "p" / "density.csv")
    assert np.allclose(evo.grid.mass(evo.snapshots[-1]), 1.0)


def test_ensemble_size_from_config(tmp_path):
    cfg = write_cfg(tmp_path / "c.yaml", {**SMALL, "observation": {"mode": "none"},
                                          "oracle": {"ensemble": 500}})
    assert run("simulate", "--config", cfg, "--ensemble", "--out", tmp_path / "s", "--quiet") == EXIT_OK
    man = json.loads((tmp_path / "s" / "manifest.json").read_text())
    assert man["ensemble"] == 500
    assert io.read_meta(tmp_path / "s" / "density.csv")["n_samples"] == 500
