import json

import numpy as np
import pytest

from levyfilter import io
from levyfilter.filter_cd import run_cd_filter
from levyfilter.fokker_planck import init_density
from levyfilter.operator import Grid1D, identity_field
from levyfilter.orbit import detect_transitions, most_probable_orbit
from levyfilter.sde import (DiscreteObservations, generate_continuous_obs,
                            generate_discrete_obs, simulate_state)
from levyfilter.zakai import run_zakai

GRID = Grid1D.from_spacing(-2.5, 2.5, 0.05)
H = identity_field()


@pytest.fixture(scope="module")
def truth(dw, example_params):
    return simulate_state(-1.0, dw, example_params, 1e-3, 1.0, 2)


def first_line(path):
    with open(path) as fh:
        return fh.readline()


def test_trajectory_round_trip(tmp_path, truth):
    path = tmp_path / "trajectory.csv"
    io.write_trajectory(path, truth)
    meta = json.loads(first_line(path)[2:])
    assert {"seed", "alpha", "epsilon", "drift", "dt"} <= set(meta)
    back = io.read_trajectory(path)
    assert np.array_equal(back.states, truth.states) and np.array_equal(back.times, truth.times)
    assert back.params == truth.params and back.seed == 2


def test_discrete_obs_round_trip(tmp_path, truth):
    obs = generate_discrete_obs(truth, H, 0.1, truth.times[::100], 2)
    path = tmp_path / "obs.csv"
    io.write_discrete_obs(path, obs, truth.meta)
    assert open(path).read().splitlines()[1] == "t,y,R"
    back = io.read_discrete_obs(path, H)
    assert np.array_equal(back.values, obs.values) and np.array_equal(back.r, obs.r)


def test_continuous_obs_round_trip(tmp_path, truth):
    obs = generate_continuous_obs(truth, H, 0.2, 1e-3, 2)
    path = tmp_path / "obs.csv"
    io.write_continuous_obs(path, obs)
    back = io.read_continuous_obs(path, H)
    assert np.array_equal(back.y_values, obs.y_values)
    assert back.obs_noise_scale == 0.2


def test_filter_density_round_trip(tmp_path, dw, example_params):
    p0 = init_density(GRID, "gaussian", center=-1.0)
    obs = DiscreteObservations([0.05, 0.1], [-0.9, -0.8], 0.1, H)
    evo = run_cd_filter(p0, obs, dw, example_params, 1e-3, 0.2)
    io.write_density(tmp_path / "density.csv", evo)
    io.write_update_events(tmp_path / "filter_events.csv", evo)
    header = open(tmp_path / "density.csv").read().splitlines()[1].split(",")
    assert header[0] == "t" and header[1] == "-2.5" and header[-1] == "2.5"
    assert len(header) == GRID.n + 1
    back = io.read_density(tmp_path / "density.csv", tmp_path / "filter_events.csv")
    assert np.array_equal(back.snapshots, evo.snapshots)
    assert back.kinds == evo.kinds and back.grid == evo.grid
    ev = open(tmp_path / "filter_events.csv").read().splitlines()
    assert ev[1] == "row,t,flag"
    assert ev[2:] == [f"{i},{t},{k}" for i, t, k in
                      [(5, "0.050000000000000003", "pre"), (6, "0.050000000000000003", "post"),
                       (11, "0.10000000000000001", "pre"), (12, "0.10000000000000001", "post")]]


def test_zakai_density_has_log_norm_column(tmp_path, truth, dw, example_params):
    obs = generate_continuous_obs(truth, H, 0.2, 1e-3, 2)
    evo = run_zakai(init_density(GRID, "gaussian", center=-1.0), obs, dw, example_params, 1e-3)
    io.write_density(tmp_path / "d.csv", evo)
    assert open(tmp_path / "d.csv").read().splitlines()[1].startswith("t,log_norm,-2.5,")
    back = io.read_density(tmp_path / "d.csv")
    assert np.array_equal(back.log_norm, evo.log_norm)


def test_orbit_and_events_round_trip(tmp_path):
    t = np.round(np.arange(0, 10.001, 0.01), 10)
    rows = np.array([np.exp(-0.5 * ((GRID.x - (1 if 3 <= s < 7 else -1)) / 0.2) ** 2) for s in t])
    from levyfilter.fokker_planck import DensityEvolution
    orbit = most_probable_orbit(DensityEvolution(GRID, t, rows))
    events = detect_transitions(orbit)
    io.write_orbit(tmp_path / "orbit.csv", orbit)
    io.write_events(tmp_path / "events.csv", events)
    assert open(tmp_path / "orbit.csv").read().splitlines()[1] == "t,x_star,peak_value"
    assert open(tmp_path / "events.csv").read().splitlines()[1] == "t_cross,from,to,dwell_before"
    back = io.read_orbit(tmp_path / "orbit.csv")
    assert np.array_equal(back.x_star, orbit.x_star)
    assert io.read_events(tmp_path / "events.csv") == events


def test_writes_are_deterministic(tmp_path, truth):
    io.write_trajectory(tmp_path / "a.csv", truth)
    io.write_trajectory(tmp_path / "b.csv", truth)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
