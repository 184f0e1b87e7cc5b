"""CSV readers and writers for trajectories, observations, densities, orbits and events.

Every file starts with one metadata line ``# {json}`` (keys sorted) followed
by a CSV header. Floats are written with ``%.17g`` so files round-trip
exactly and reruns are byte-identical.
"""
import csv
import json

import numpy as np

from .fokker_planck import DensityEvolution
from .operator import Grid1D
from .orbit import MostProbableOrbit, TransitionEvent
from .sde import ContinuousObservationPath, DiscreteObservations, Trajectory

FMT = "%.17g"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _write(path, meta, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps(_jsonable(meta or {}), sort_keys=True) + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(r if isinstance(r, str) else FMT % r for r in row) + "\n")


def _read(path):
    with open(path, newline="") as fh:
        first = fh.readline()
        meta = json.loads(first[1:]) if first.startswith("#") else {}
        if not first.startswith("#"):
            fh.seek(0)
        reader = csv.reader(fh)
        header = next(reader)
        rows = [r for r in reader if r]
    return meta, header, rows


def read_meta(path):
    return _read(path)[0]


def write_trajectory(path, traj):
    _write(path, traj.meta, ["t", "x"], zip(traj.times, traj.states))


def read_trajectory(path):
    meta, _, rows = _read(path)
    a = np.array(rows, dtype=float).reshape(-1, 2)
    from .levy import StableParams
    params = StableParams(meta["alpha"], meta["epsilon"]) if "alpha" in meta else None
    return Trajectory(a[:, 0], a[:, 1], meta.get("seed"), params, meta.get("drift", ""),
                      meta.get("dt"), meta.get("x0"), bool(meta.get("overflow", False)))


def write_discrete_obs(path, obs, meta=None):
    _write(path, {**obs.meta, **(meta or {})}, ["t", "y", "R"], zip(obs.times, obs.values, obs.r))


def read_discrete_obs(path, h=None):
    meta, _, rows = _read(path)
    a = np.array(rows, dtype=float).reshape(-1, 3)
    return DiscreteObservations(a[:, 0], a[:, 1], a[:, 2], h, meta)


def write_continuous_obs(path, obs, meta=None):
    m = {**obs.meta, "obs_noise_scale": obs.obs_noise_scale, **(meta or {})}
    _write(path, m, ["t", "Y"], zip(obs.times, obs.y_values))


def read_continuous_obs(path, h=None, obs_noise_scale=None):
    meta, _, rows = _read(path)
    a = np.array(rows, dtype=float).reshape(-1, 2)
    scale = obs_noise_scale if obs_noise_scale is not None else meta.get("obs_noise_scale", 1.0)
    return ContinuousObservationPath(a[:, 0], a[:, 1], float(scale), h, meta)


def write_density(path, evo, meta=None):
    """Rows ``t[,log_norm],p(x_1),...,p(x_n)``.

    The header lists node positions rounded to 12 decimals for readability;
    the exact grid is rebuilt from x_min, x_max, n in the metadata line.
    """
    nodes = [repr(round(float(x), 12) + 0.0) for x in evo.grid.x]
    m = {**evo.meta, **(meta or {}), "x_min": evo.grid.x_min, "x_max": evo.grid.x_max,
         "n": evo.grid.n, "store_stride": evo.store_stride}
    if evo.log_norm is not None:
        header = ["t", "log_norm"] + nodes
        rows = (np.concatenate([[t, ln], s]) for t, ln, s in zip(evo.times, evo.log_norm, evo.snapshots))
    else:
        header = ["t"] + nodes
        rows = (np.concatenate([[t], s]) for t, s in zip(evo.times, evo.snapshots))
    _write(path, m, header, (r.tolist() for r in rows))


def write_update_events(path, evo, meta=None):
    """One line per stored Bayes-update row: ``row,t,flag`` with flag pre/post."""
    rows = [(str(i), evo.times[i], k) for i, k in enumerate(evo.kinds) if k in ("pre", "post")]
    _write(path, meta, ["row", "t", "flag"], rows)


def read_density(path, events_path=None):
    meta, header, rows = _read(path)
    a = np.array(rows, dtype=float)
    has_ln = header[1] == "log_norm"
    off = 2 if has_ln else 1
    grid = Grid1D(float(meta["x_min"]), float(meta["x_max"]), int(meta["n"]))
    kinds = ["fp"] * len(a)
    if events_path is not None:
        _, _, ev = _read(events_path)
        for row, _, flag in ev:
            kinds[int(row)] = flag
    return DensityEvolution(grid, a[:, 0], a[:, off:], kinds, int(meta.get("store_stride", 1)),
                            a[:, 1] if has_ln else None, meta=meta)


def write_orbit(path, orbit, meta=None):
    _write(path, {**orbit.meta, **(meta or {})}, ["t", "x_star", "peak_value"],
           zip(orbit.times, orbit.x_star, orbit.peak_value))


def read_orbit(path):
    meta, _, rows = _read(path)
    a = np.array(rows, dtype=float).reshape(-1, 3)
    return MostProbableOrbit(a[:, 0], a[:, 1], a[:, 2], meta)


def write_events(path, events, meta=None):
    _write(path, meta, ["t_cross", "from", "to", "dwell_before"],
           ((e.t_cross, e.from_well, e.to_well, e.dwell_before) for e in events))


def read_events(path):
    _, _, rows = _read(path)
    return [TransitionEvent(*map(float, r)) for r in rows]
