"""Ground-truth paths, synthetic observations and sampling-based oracles.

All randomness is drawn from per-purpose substreams of the scenario seed
(see :mod:`levyfilter.levy`), so a trajectory, its observations and any
particle oracle run on the same seed are mutually independent.
"""
from dataclasses import dataclass, field
import math
import warnings

import numpy as np

from .fokker_planck import DensityEvolution
from .levy import (STREAM_ENSEMBLE, STREAM_OBS, STREAM_PARTICLES, STREAM_STATE,
                   StableParams, increment_scale, stable_blocks, standard_stable,
                   substream)

OVERFLOW_LIMIT = 1e6


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    seed: int = None
    params: StableParams = None
    drift_name: str = ""
    dt: float = None
    x0: float = None
    overflow: bool = False

    def __len__(self):
        return len(self.times)

    @property
    def meta(self):
        return {"seed": self.seed, "alpha": self.params.alpha, "epsilon": self.params.epsilon,
                "drift": self.drift_name, "dt": self.dt, "x0": self.x0,
                "overflow": self.overflow}


@dataclass
class DiscreteObservations:
    times: np.ndarray
    values: np.ndarray
    r: np.ndarray
    h: object = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.r = np.broadcast_to(np.asarray(self.r, dtype=float), self.times.shape).copy()
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("observation times must be strictly increasing")
        if np.any(self.r <= 0):
            raise ValueError("observation variances R_k must be positive")

    def __len__(self):
        return len(self.times)


@dataclass
class ContinuousObservationPath:
    """Cumulative observation Y on a uniform time grid, Y(times[0]) = 0."""

    times: np.ndarray
    y_values: np.ndarray
    obs_noise_scale: float
    h: object = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.y_values = np.asarray(self.y_values, dtype=float)
        steps = np.diff(self.times)
        if len(steps) and np.ptp(steps) > 1e-9 * steps.mean():
            raise ValueError("continuous observation times must be uniform")
        if not np.all(np.isfinite(self.y_values)):
            raise ValueError("observation path has non-finite values")

    @property
    def dt_obs(self):
        return float(self.times[1] - self.times[0])

    @property
    def increments(self):
        return np.diff(self.y_values)


@dataclass
class ParticleEnsemble:
    t: float
    positions: np.ndarray
    weights: np.ndarray

    @property
    def ess(self):
        return 1.0 / float(np.sum(self.weights ** 2))

    def histogram(self, grid):
        """Weighted histogram on cells [x_i - h/2, x_i + h/2] as a density."""
        return _cell_histogram(grid, self.positions, self.weights)


def _cell_edges(grid):
    h = grid.dx
    return np.linspace(grid.x_min - 0.5 * h, grid.x_max + 0.5 * h, grid.n + 1)


def _cell_histogram(grid, positions, weights=None):
    counts, _ = np.histogram(positions, _cell_edges(grid), weights=weights)
    total = len(positions) if weights is None else 1.0
    return counts / (total * grid.dx)


def simulate_state(x0, drift, params, dt, T, seed, mirror_noise=False):
    """Euler-Maruyama path of dX = f(X, t) dt + eps dL^alpha on [0, T].

    ``mirror_noise`` negates every noise increment (for symmetry checks).
    A path leaving |x| < 1e6 is cut short and flagged ``overflow``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    n = int(round(T / dt))
    rng = substream(seed, STREAM_STATE)
    noise = increment_scale(params, dt) * stable_blocks(params.alpha, n, rng)
    if mirror_noise:
        noise = -noise
    times = dt * np.arange(n + 1)
    states = np.empty(n + 1)
    states[0] = x = float(x0)
    overflow = False
    f = drift.fn
    for k in range(n):
        x = x + float(f(x, times[k])) * dt + noise[k]
        if not abs(x) < OVERFLOW_LIMIT:
            overflow = True
            times, states = times[:k + 1], states[:k + 1]
            break
        states[k + 1] = x
    return Trajectory(times, states, seed, params, drift.name, dt, float(x0), overflow)


def _snap(traj, t):
    k = int(round((t - traj.times[0]) / traj.dt))
    if k < 0 or k >= len(traj) or abs(traj.times[k] - t) > 0.5 * traj.dt + 1e-12:
        raise ValueError(f"observation time {t} is not on the trajectory grid")
    return k


def generate_discrete_obs(traj, h, r, obs_times, seed):
    """y_k = h(x(t_k), t_k) + sqrt(R_k) v_k with v_k standard normal."""
    obs_times = np.asarray(obs_times, dtype=float)
    r = np.broadcast_to(np.asarray(r, dtype=float), obs_times.shape)
    if np.any(r <= 0):
        raise ValueError("observation variance must be positive")
    idx = np.array([_snap(traj, t) for t in obs_times], dtype=int)
    rng = substream(seed, STREAM_OBS)
    v = rng.standard_normal(len(obs_times))
    clean = np.array([float(h(traj.states[k], traj.times[k])) for k in idx])
    return DiscreteObservations(obs_times, clean + np.sqrt(r) * v, r, h,
                                {"seed": seed, "h": getattr(h, "name", "custom")})


def observation_times(t0, t_end, spacing):
    n = int(math.floor((t_end - t0) / spacing + 1e-9))
    return t0 + spacing * np.arange(n + 1)


def generate_continuous_obs(traj, h, obs_noise_scale, dt, seed):
    """Cumulative Y with dY = h(X, t) dt + scale dW, Y(0) = 0.

    ``dt`` must be a multiple of the trajectory step; the drift integral
    uses the left-endpoint rule on the trajectory grid.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    m = dt / traj.dt
    if abs(m - round(m)) > 1e-9 * max(1.0, m):
        raise ValueError("observation step must be a multiple of the trajectory step")
    m = int(round(m))
    hx = np.array([float(h(x, t)) for x, t in zip(traj.states[:-1], traj.times[:-1])])
    n = (len(traj) - 1) // m
    drift_part = hx[: n * m].reshape(n, m).sum(axis=1) * traj.dt
    rng = substream(seed, STREAM_OBS)
    noise = obs_noise_scale * math.sqrt(dt) * rng.standard_normal(n)
    y = np.concatenate([[0.0], np.cumsum(drift_part + noise)])
    times = traj.times[0] + dt * np.arange(n + 1)
    return ContinuousObservationPath(times, y, float(obs_noise_scale), h,
                                     {"seed": seed, "h": getattr(h, "name", "custom")})


def sample_from_density(p0, n, rng):
    """Draw from the piecewise-constant density whose cell averages are ``p0.values``."""
    grid = p0.grid
    w = np.clip(p0.values, 0.0, None)
    cells = rng.choice(grid.n, size=n, p=w / w.sum())
    return grid.x[cells] + grid.dx * (rng.random(n) - 0.5)


def _euler_step(x, drift, t, dt, scale, alpha, rng):
    return x + drift.fn(x, t) * dt + scale * standard_stable(alpha, len(x), rng)


def monte_carlo_density(p0, drift, params, dt, times, n_samples, seed, kill=True):
    """Histogram oracle for the Fokker-Planck solution.

    Samples start from ``p0`` and follow Euler-Maruyama; with ``kill`` they
    are removed on leaving the cell span of the grid, which mirrors the
    zero exterior condition. Returns a :class:`DensityEvolution` whose
    snapshots have mass equal to the surviving fraction.
    """
    grid = p0.grid
    rng = substream(seed, STREAM_ENSEMBLE)
    x = sample_from_density(p0, n_samples, rng)
    alive = np.ones(n_samples, dtype=bool)
    lo, hi = grid.x_min - 0.5 * grid.dx, grid.x_max + 0.5 * grid.dx
    times = np.sort(np.asarray(times, dtype=float))
    targets = [int(round(t / dt)) for t in times]
    scale = increment_scale(params, dt)
    snaps, k = [], 0
    for target in targets:
        while k < target:
            x = _euler_step(x, drift, k * dt, dt, scale, params.alpha, rng)
            if kill:
                alive &= (x >= lo) & (x < hi)
                x[~alive] = 0.0
            else:
                x = np.where(np.isfinite(x), x, 0.0)
            k += 1
        snaps.append(_cell_histogram(grid, x[alive]) * alive.mean())
    return DensityEvolution(grid, times, np.array(snaps), store_stride=1,
                            meta={"oracle": "monte_carlo", "n_samples": n_samples,
                                  "seed": seed, "dt": dt, "kill": kill})


def _systematic_resample(weights, rng):
    n = len(weights)
    u = (rng.random() + np.arange(n)) / n
    idx = np.searchsorted(np.cumsum(weights), u)
    return np.minimum(idx, n - 1)


def _normalize(logw):
    w = np.exp(logw - logw.max())
    return w / w.sum()


def bootstrap_particle_filter(obs, drift, params, n_particles, seed, p0, dt,
                              t_end=None, record_times=None, domain=None):
    """Bootstrap particle filter for discrete or continuous observations.

    Discrete observations: particles follow the state SDE between
    observation times and are weighted by the Gaussian likelihood; one
    ensemble is recorded per observation (after weighting). Continuous
    observations: each step multiplies the weights by
    exp((h dY - h^2 dt / 2) / scale^2) and ensembles are recorded at
    ``record_times`` (default: every observation node).

    ``domain=(lo, hi)`` kills particles that leave it (zero weight).
    Systematic resampling runs whenever the effective sample size drops
    below n/2.
    """
    if n_particles < 100:
        raise ValueError("bootstrap filter needs at least 100 particles")
    rng = substream(seed, STREAM_PARTICLES)
    x = sample_from_density(p0, n_particles, rng)
    logw = np.zeros(n_particles)
    scale = increment_scale(params, dt)
    lo, hi = domain if domain is not None else (-OVERFLOW_LIMIT, OVERFLOW_LIMIT)
    out = []

    def propagate(x, logw, t, nsteps, step_dt):
        sc = scale if step_dt == dt else increment_scale(params, step_dt)
        for j in range(nsteps):
            x = _euler_step(x, drift, t + j * step_dt, step_dt, sc, params.alpha, rng)
            dead = ~((x > lo) & (x < hi))
            if dead.any():
                logw[dead] = -np.inf
                x[dead] = 0.0
        return x

    def check_and_resample(x, logw, t):
        if not np.isfinite(logw.max()):
            raise RuntimeError(f"all particles lost at t={t:g}")
        w = _normalize(logw)
        ess = 1.0 / np.sum(w ** 2)
        if ess < 10:
            warnings.warn(f"particle weights collapsed (ESS={ess:.1f}) at t={t:g}", RuntimeWarning)
        return w, ess

    if isinstance(obs, DiscreteObservations):
        t = 0.0 if obs.meta.get("t0") is None else obs.meta["t0"]
        for tk, yk, rk in zip(obs.times, obs.values, obs.r):
            n_steps = int(round((tk - t) / dt))
            x = propagate(x, logw, t, n_steps, dt)
            t = tk
            hx = obs.h(x, tk)
            logw = logw - 0.5 * (yk - hx) ** 2 / rk
            w, ess = check_and_resample(x, logw, tk)
            out.append(ParticleEnsemble(tk, x.copy(), w))
            if ess < 0.5 * n_particles:
                idx = _systematic_resample(w, rng)
                x, logw = x[idx], np.zeros(n_particles)
        return out

    path = obs
    m = path.dt_obs / dt
    if abs(m - round(m)) > 1e-9 * max(1.0, m):
        raise ValueError("solver dt must divide the observation step")
    m = int(round(m))
    if t_end is None:
        t_end = float(path.times[-1])
    n_total = int(round((t_end - path.times[0]) / dt))
    if record_times is None:
        record_steps = set(range(0, n_total + 1, m))
    else:
        record_steps = {int(round((t - path.times[0]) / dt)) for t in record_times}
    dys = np.repeat(path.increments / m, m)
    inv_var = 1.0 / path.obs_noise_scale ** 2
    t0 = float(path.times[0])
    if 0 in record_steps:
        out.append(ParticleEnsemble(t0, x.copy(), _normalize(logw)))
    for k in range(n_total):
        t = t0 + k * dt
        hx = path.h(x, t)
        x = propagate(x, logw, t, 1, dt)
        logw += inv_var * (hx * dys[k] - 0.5 * hx * hx * dt)
        w, ess = check_and_resample(x, logw, t + dt)
        if k + 1 in record_steps:
            out.append(ParticleEnsemble(t + dt, x.copy(), w))
        if ess < 0.5 * n_particles:
            idx = _systematic_resample(w, rng)
            x, logw = x[idx], np.zeros(n_particles)
        else:
            logw -= logw.max()
    return out


def ensembles_to_evolution(ensembles, grid, meta=None):
    """Project weighted ensembles onto ``grid`` as normalized densities."""
    snaps = []
    for e in ensembles:
        v = e.histogram(grid)
        m = grid.mass(v)
        snaps.append(v / m if m > 0 else v)
    return DensityEvolution(grid, [e.t for e in ensembles], np.array(snaps), store_stride=1,
                            meta=dict(meta or {}, oracle="particle_filter"))
