"""Nonlocal Zakai equation for continuous observations.

Each explicit step is

    p <- p + dt A* p + g(x, t) p dY,   dY = Y(t + dt) - Y(t),

with the observation gain g = h / scale^2. For unit observation noise this
is the Zakai equation with sensor h; for dY = h dt + scale dW it is the
same equation written for the whitened observation Y / scale with sensor
h / scale, so the normalized solution is the exact conditional density.
``whiten=False`` keeps g = h regardless of the noise scale.

The recursion is linear in p, so the density is rescaled to unit mass
every ``renormalize_every`` steps and the log of each factor is
accumulated; snapshots are stored normalized together with that log
constant.
"""
import numpy as np

from .fokker_planck import (DEFAULT_STORE_STRIDE, DensityEvolution, DensityField,
                            InstabilityError, Propagator)
from .operator import OperatorMatrix
from . import kernels


def step_zakai(p, op, h, t, dy, dt, backend=None):
    """One explicit Zakai step p + dt A* p + h(x, t) p dY (negatives clipped)."""
    grid = p.grid
    values = np.array(p.values, dtype=float)
    m = op.entries if isinstance(op, OperatorMatrix) else np.asarray(op, dtype=float)
    gain = np.asarray(h(grid.x, t), dtype=float)
    status, _, _, _, _ = kernels.advance(m, values, dt, 1, grid.dx, gain, np.array([dy], float),
                                         backend=backend)
    if status != kernels.OK:
        raise InstabilityError(f"Zakai step blew up at t={t:g}")
    return DensityField(grid, values, False)


def observation_gain(path, whiten=True):
    """Sensor multiplying p dY: h / scale^2 when whitening, else h."""
    h = path.h
    if not whiten or path.obs_noise_scale in (0.0, 1.0):
        return h
    inv_var = 1.0 / path.obs_noise_scale ** 2
    from .operator import StateFunction
    return StateFunction(lambda x, t: inv_var * np.asarray(h(x, t), dtype=float),
                         f"{getattr(h, 'name', 'h')}/scale^2", getattr(h, "autonomous", True))


def run_zakai(p0, obs, drift, params, dt, t_end=None, renormalize_every=1,
              store_stride=DEFAULT_STORE_STRIDE, whiten=True, scheme="hybrid", inner="zeta",
              backend=None, propagator=None):
    """Integrate the Zakai equation along an observation path.

    Observation increments over one observation step are split evenly
    across the ``dt_obs / dt`` solver sub-steps.
    """
    grid = p0.grid
    prop = propagator or Propagator(grid, params, drift, dt, scheme, inner, backend)
    m = obs.dt_obs / dt
    if abs(m - round(m)) > 1e-9 * max(1.0, m):
        raise ValueError("solver dt must divide the observation step")
    m = int(round(m))
    t0 = float(obs.times[0])
    if t_end is None:
        t_end = float(obs.times[-1])
    n_total = int(round((t_end - t0) / dt))
    if n_total > m * (len(obs.times) - 1):
        raise ValueError("observation path is shorter than the filtering window")
    dys = np.repeat(obs.increments / m, m)[:n_total]
    g = observation_gain(obs, whiten)
    if getattr(g, "autonomous", True):
        gain = np.asarray(g(grid.x, t0), dtype=float)
    else:
        gain = lambda t: np.asarray(g(grid.x, t), dtype=float)  # noqa: E731

    p = np.array(p0.values, dtype=float)
    log_norm = 0.0
    s = grid.mass(p)
    p /= s
    log_norm += np.log(s)
    times, snaps, lognorms = [t0], [p.copy()], [log_norm]
    step = 0
    while step < n_total:
        count = min(store_stride, n_total - step)
        log_norm += prop.advance(p, t0 + step * dt, count, gain=gain,
                                 dy=dys[step:step + count],
                                 renorm_every=renormalize_every, step_offset=step)
        step += count
        s = grid.mass(p)
        if not s > 0:
            raise InstabilityError(f"Zakai density lost all mass at t={t0 + step * dt:g}")
        times.append(t0 + step * dt)
        snaps.append(p / s)
        lognorms.append(log_norm + np.log(s))
    meta = {"dt": dt, "t0": t0, "t_end": t_end, "renormalize_every": renormalize_every,
            "gain": getattr(g, "name", "h"), "obs_noise_scale": obs.obs_noise_scale,
            "whiten": whiten, **prop.op.meta}
    return DensityEvolution(grid, np.array(times), np.array(snaps), None, store_stride,
                            np.array(lognorms), prop.diagnostics, meta)
