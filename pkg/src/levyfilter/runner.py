"""Scenario orchestration: build objects from a resolved config, run, write artifacts, compare runs."""
from dataclasses import dataclass, field
import datetime
import hashlib
import json
import os
import warnings

import numpy as np

from . import __version__, io, kernels
from .filter_cd import run_cd_filter
from .fokker_planck import Propagator, init_density, solve_fp
from .levy import StableParams
from .operator import (Grid1D, double_well, identity_field, polynomial_field, zero_field)
from .orbit import detect_transitions, match_events, most_probable_orbit, sign_agreement
from .sde import (bootstrap_particle_filter, ensembles_to_evolution, generate_continuous_obs,
                  generate_discrete_obs, monte_carlo_density, observation_times, simulate_state)
from .zakai import run_zakai

OUT_ENV = "LEVYFILTER_OUT"
DEFAULT_OUT_ROOT = "runs"
COMMANDS = ("simulate", "fokker-planck", "filter-discrete", "filter-zakai", "twin")
METRICS = ("l1_density", "orbit_sign_agreement", "event_match")
MASS_WARN = 1e-6


class AxisMismatchError(ValueError):
    """Two runs do not share a grid or time axis."""


@dataclass
class Scenario:
    cfg: dict
    grid: Grid1D
    params: StableParams
    drift: object
    h: object
    p0: object
    stride: int

    def propagator(self):
        sol = self.cfg["solver"]
        return Propagator(self.grid, self.params, self.drift, self.cfg["time"]["dt"],
                          sol["drift_scheme"], sol["inner_rule"], sol["backend"])


@dataclass
class RunResult:
    out_dir: str
    files: list
    warnings: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def exit_code(self):
        return 1 if self.warnings else 0


def build(cfg):
    m, g, obs = cfg["model"], cfg["grid"], cfg["observation"]
    grid = Grid1D.from_spacing(g["x_min"], g["x_max"], g["dx"])
    params = StableParams(m["alpha"], m["epsilon"])
    if m["drift"] == "double_well":
        drift = double_well(m["drift_scale"])
    elif m["drift"] == "zero":
        drift = zero_field()
    else:
        drift = polynomial_field(m["drift_coeffs"])
    h = identity_field() if obs["h"] == "identity" else polynomial_field(obs["h_coeffs"])
    init = {k: v for k, v in cfg["init"].items() if v is not None}
    p0 = init_density(grid, **init)
    return Scenario(cfg, grid, params, drift, h, p0, cfg["solver"]["store_stride"])


def default_out_dir(cfg, command):
    if cfg["output"]["dir"]:
        return cfg["output"]["dir"]
    root = os.environ.get(OUT_ENV, DEFAULT_OUT_ROOT)
    return os.path.join(root, f"{cfg['name']}-seed{cfg['seed']}-{command}")


def _sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _store_times(sc):
    dt, T = sc.cfg["time"]["dt"], sc.cfg["time"]["T"]
    n = int(round(T / dt))
    steps = sorted(set(range(0, n + 1, sc.stride)) | {n})
    return np.array([k * dt for k in steps])


def _truth_and_obs(sc, write):
    cfg = sc.cfg
    seed, dt, T = cfg["seed"], cfg["time"]["dt"], cfg["time"]["T"]
    truth = simulate_state(cfg["model"]["x0"], sc.drift, sc.params, dt, T, seed)
    write("trajectory.csv", io.write_trajectory, truth)
    obs_cfg = cfg["observation"]
    obs = None
    meta = {**truth.meta}
    if obs_cfg["mode"] == "discrete":
        times = observation_times(0.0, truth.times[-1], obs_cfg["spacing"])
        obs = generate_discrete_obs(truth, sc.h, obs_cfg["R"], times, seed)
        write("observations.csv", io.write_discrete_obs, obs, meta)
    elif obs_cfg["mode"] == "continuous":
        obs = generate_continuous_obs(truth, sc.h, obs_cfg["noise_scale"], obs_cfg["dt_obs"], seed)
        write("observations.csv", io.write_continuous_obs, obs, meta)
    return truth, obs


def _orbit_outputs(sc, evo, write, prefix=""):
    an = sc.cfg["analysis"]
    orbit = most_probable_orbit(evo)
    events = detect_transitions(orbit, an["wells"], an["deadband"], an["min_dwell"])
    write(prefix + "orbit.csv", io.write_orbit, orbit)
    write(prefix + "events.csv", io.write_events, events, {"wells": an["wells"],
                                                           "deadband": an["deadband"],
                                                           "min_dwell": an["min_dwell"]})
    return orbit, events


def _run_pde_filter(sc, obs):
    cfg = sc.cfg
    dt, T = cfg["time"]["dt"], cfg["time"]["T"]
    prop = sc.propagator()
    if cfg["observation"]["mode"] == "discrete":
        evo = run_cd_filter(sc.p0, obs, sc.drift, sc.params, dt, T, store_stride=sc.stride,
                            propagator=prop)
    else:
        evo = run_zakai(sc.p0, obs, sc.drift, sc.params, dt, obs.times[-1],
                        cfg["solver"]["renormalize_every"], sc.stride, cfg["solver"]["whiten"],
                        propagator=prop)
    return evo


def _run_particles(sc, obs):
    cfg = sc.cfg
    dt = cfg["time"]["dt"]
    record = cfg["oracle"]["record_times"]
    if record is None:
        record = _store_times(sc)
    domain = (sc.grid.x_min - 0.5 * sc.grid.dx, sc.grid.x_max + 0.5 * sc.grid.dx)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ens = bootstrap_particle_filter(obs, sc.drift, sc.params, cfg["oracle"]["particles"],
                                        cfg["seed"], sc.p0, dt, record_times=record,
                                        domain=domain)
    evo = ensembles_to_evolution(ens, sc.grid, {"n_particles": cfg["oracle"]["particles"],
                                                "seed": cfg["seed"]})
    return evo, [str(w.message) for w in caught]


def run_scenario(cfg, command="twin", out_dir=None, ensemble=None, engine=None, quiet=True,
                 dump_operator=False):
    """Run one scenario and write its artifacts.

    command: simulate | fokker-planck | filter-discrete | filter-zakai | twin.
    ``ensemble`` (simulate only) adds a Monte-Carlo histogram density;
    ``engine`` (filter-zakai / filter-discrete) selects 'pde' or 'particles'.
    ``dump_operator`` writes the assembled A* as operator.csv (row, col, value).
    """
    if command not in COMMANDS:
        raise ValueError(f"unknown command {command!r}")
    mode = cfg["observation"]["mode"]
    if command == "filter-discrete" and mode != "discrete":
        raise ValueError("filter-discrete needs observation.mode = discrete")
    if command == "filter-zakai" and mode != "continuous":
        raise ValueError("filter-zakai needs observation.mode = continuous")
    engine = engine or cfg["oracle"]["engine"]
    sc = build(cfg)
    out_dir = out_dir or default_out_dir(cfg, command)
    os.makedirs(out_dir, exist_ok=True)
    files, notes, summary = [], [], {}

    def write(name, fn, *args):
        path = os.path.join(out_dir, name)
        fn(path, *args)
        files.append(name)

    def say(msg):
        if not quiet:
            print(msg)

    dt, T = cfg["time"]["dt"], cfg["time"]["T"]
    if dump_operator:
        write("operator.csv", lambda path: sc.propagator().op.to_csv(path))
    diagnostics = {}
    truth = obs = evo = None
    if command in ("simulate", "filter-discrete", "filter-zakai") or (command == "twin" and mode != "none"):
        truth, obs = _truth_and_obs(sc, write)
        say(f"simulated {len(truth)} states" + (" (overflow)" if truth.overflow else ""))
        if truth.overflow:
            notes.append("true path overflowed and was truncated")
        if not np.all((truth.states > sc.grid.x_min) & (truth.states < sc.grid.x_max)):
            notes.append("true path left the computational domain")
    if command == "simulate" and ensemble:
        evo = monte_carlo_density(sc.p0, sc.drift, sc.params, dt, _store_times(sc), int(ensemble),
                                  cfg["seed"])
        write("density.csv", io.write_density, evo)
        say(f"Monte-Carlo histogram from {ensemble} samples")
    if command == "fokker-planck" or (command == "twin" and mode == "none"):
        evo = solve_fp(sc.p0, sc.drift, sc.params, 0.0, T, dt, sc.stride,
                       propagator=sc.propagator())
    elif command in ("filter-discrete", "filter-zakai", "twin") and mode != "none":
        if engine == "particles":
            evo, pf_notes = _run_particles(sc, obs)
            notes.extend(pf_notes)
        else:
            evo = _run_pde_filter(sc, obs)
    if command != "simulate":
        diagnostics = evo.diagnostics
        write("density.csv", io.write_density, evo)
        if any(k != "fp" for k in evo.kinds):
            write("filter_events.csv", io.write_update_events, evo)
        orbit, events = _orbit_outputs(sc, evo, write)
        say(f"{len(evo)} snapshots, {len(events)} orbit transitions")
        if diagnostics.get("clipped_mass", 0.0) > MASS_WARN:
            notes.append(f"clipped negative mass {diagnostics['clipped_mass']:.3g}")
        if truth is not None:
            an = cfg["analysis"]
            ev_true = detect_transitions((truth.times, truth.states), an["wells"], an["deadband"])
            write("truth_events.csv", io.write_events, ev_true,
                  {"wells": an["wells"], "deadband": an["deadband"], "min_dwell": 0.0})
            agree = sign_agreement(orbit.times, orbit.x_star, truth.times, truth.states,
                                   an["burn_in"])
            match = match_events(events, ev_true, an["lag_tol"])
            summary = {"sign_agreement": agree, **match}
            if command == "twin":
                write("twin_report.json", _write_json, summary)
            say(f"sign agreement {agree:.3f}; events {match['count_est']} vs "
                f"{match['count_true']} true, matched={match['matched']}")

    manifest = {
        "command": command,
        "engine": engine if command != "simulate" else None,
        "ensemble": ensemble,
        "config": cfg,
        "version": __version__,
        "backend": diagnostics.get("backend", kernels.BACKEND),
        "diagnostics": diagnostics,
        "warnings": notes,
        "summary": summary,
        "files": {name: _sha256(os.path.join(out_dir, name)) for name in files},
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    _write_json(os.path.join(out_dir, "manifest.json"), manifest)
    for n in notes:
        say(f"warning: {n}")
    return RunResult(out_dir, files + ["manifest.json"], notes, summary)


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(io._jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_density(run):
    ev = os.path.join(run, "filter_events.csv")
    evo = io.read_density(os.path.join(run, "density.csv"), ev if os.path.exists(ev) else None)
    return evo.filtered()


def _select_times(times_a, times_b, times, tol=1e-9):
    if times is None:
        if len(times_a) != len(times_b) or not np.allclose(times_a, times_b, atol=tol, rtol=0):
            raise AxisMismatchError("runs have different time axes; pass explicit times")
        return np.arange(len(times_a)), np.arange(len(times_b))
    ia, ib = [], []
    for t in times:
        da, db = np.abs(times_a - t), np.abs(times_b - t)
        if da.min() > tol or db.min() > tol:
            raise AxisMismatchError(f"time {t:g} is not stored in both runs")
        ia.append(int(np.argmin(da)))
        ib.append(int(np.argmin(db)))
    return np.array(ia), np.array(ib)


def compare_runs(run_a, run_b, metric, times=None, t_min=0.0, lag_tol=0.5, out_dir=None):
    """Compare two run directories.

    l1_density: h * sum |p_a - p_b| per shared time (rows before a Bayes
    update are skipped). orbit_sign_agreement: per-time equality of
    sign(x_star), scalar = fraction over t >= t_min. event_match: count
    equality plus per-event crossing lags. With ``out_dir`` the per-time
    series goes to ``compare_<metric>.csv`` and the scalars to
    ``compare_<metric>.json``.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {', '.join(METRICS)}")
    if metric == "l1_density":
        a, b = _load_density(run_a), _load_density(run_b)
        if a.grid.n != b.grid.n or not np.allclose(a.grid.x, b.grid.x, atol=1e-12, rtol=0):
            raise AxisMismatchError("runs are on different grids")
        ia, ib = _select_times(a.times, b.times, times)
        values = a.grid.dx * np.abs(a.snapshots[ia] - b.snapshots[ib]).sum(axis=1)
        series = (["t", "l1"], list(zip(a.times[ia], values)))
        report = {"metric": metric, "max": float(values.max()), "mean": float(values.mean()),
                  "times": a.times[ia].tolist(), "values": values.tolist()}
    elif metric == "orbit_sign_agreement":
        a = io.read_orbit(os.path.join(run_a, "orbit.csv"))
        b = io.read_orbit(os.path.join(run_b, "orbit.csv"))
        ia, ib = _select_times(a.times, b.times, times)
        agree = (np.sign(a.x_star[ia]) == np.sign(b.x_star[ib])).astype(float)
        keep = a.times[ia] >= t_min - 1e-12
        series = (["t", "agree"], list(zip(a.times[ia], agree)))
        report = {"metric": metric, "t_min": t_min,
                  "value": float(agree[keep].mean()) if keep.any() else float("nan")}
    else:
        ea = io.read_events(os.path.join(run_a, "events.csv"))
        eb = io.read_events(os.path.join(run_b, "events.csv"))
        m = match_events(ea, eb, lag_tol)
        series = (["t_cross_a", "t_cross_b", "lag"],
                  [(x.t_cross, y.t_cross, lag) for x, y, lag in zip(ea, eb, m["lags"])])
        report = {"metric": metric, "lag_tol": lag_tol, **m}
    report.update({"run_a": os.path.abspath(run_a), "run_b": os.path.abspath(run_b)})
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        io._write(os.path.join(out_dir, f"compare_{metric}.csv"), {"metric": metric},
                  series[0], series[1])
        _write_json(os.path.join(out_dir, f"compare_{metric}.json"), report)
    return report
