"""Continuous-discrete filtering: Fokker-Planck prediction, Bayes correction."""
import math

import numpy as np

from .fokker_planck import (DEFAULT_STORE_STRIDE, DensityEvolution, DensityField,
                            InstabilityError, Propagator)

DEFAULT_OBS_SPACING = 0.1


class DegenerateEvidenceError(ValueError):
    """Observation carries no representable evidence under the prior."""


def gaussian_likelihood(y, x, t, r, h):
    """p(y | x) = (2 pi R)^-1/2 exp(-(y - h(x, t))^2 / 2R)."""
    if not r > 0:
        raise ValueError("observation variance must be positive")
    resid = y - h(x, t)
    return np.exp(-0.5 * resid * resid / r) / math.sqrt(2.0 * math.pi * r)


def bayes_update(prior, y, t, r, h):
    """Posterior proportional to likelihood times prior, normalized on the grid.

    The likelihood is formed in log space and shifted by its maximum over
    the prior's support before exponentiation, so strongly informative
    observations do not underflow.
    """
    if not r > 0:
        raise ValueError("observation variance must be positive")
    grid = prior.grid
    values = np.asarray(prior.values, dtype=float)
    support = values > 0
    if not support.any():
        raise DegenerateEvidenceError("prior has no mass")
    with np.errstate(over="ignore", invalid="ignore"):
        resid = y - h(grid.x, t)
        loglik = -0.5 * resid * resid / r
    top = loglik[support].max()
    if not np.isfinite(top):
        raise DegenerateEvidenceError(f"likelihood is not representable for y={y:g} at t={t:g}")
    loglik -= top
    post = np.where(support, np.exp(loglik) * values, 0.0)
    evidence = grid.mass(post)
    if not (evidence > 0 and np.isfinite(evidence)):
        raise DegenerateEvidenceError(f"evidence underflowed for y={y:g} at t={t:g}")
    return DensityField(grid, post / evidence, True)


def run_cd_filter(p0, obs, drift, params, dt, t_end, t0=0.0, store_stride=DEFAULT_STORE_STRIDE,
                  scheme="hybrid", inner="zeta", backend=None, propagator=None):
    """Alternate Fokker-Planck propagation and Bayes updates at observation times.

    Snapshots are stored every ``store_stride`` solver steps (kind 'fp') and
    on both sides of each update ('pre' is the propagated prior at t_k,
    'post' the posterior).
    """
    grid = p0.grid
    prop = propagator or Propagator(grid, params, drift, dt, scheme, inner, backend)
    n_total = int(round((t_end - t0) / dt))
    if abs(n_total * dt - (t_end - t0)) > 1e-9 * max(1.0, abs(t_end)):
        raise ValueError("dt must divide the filtering window")
    obs_steps = {}
    for k, tk in enumerate(obs.times):
        s = (tk - t0) / dt
        if s < -1e-9 or tk > t_end + 1e-9 * max(1.0, abs(t_end)):
            raise ValueError(f"observation time {tk} outside [{t0}, {t_end}]")
        if abs(s - round(s)) > 1e-6:
            raise ValueError(f"observation time {tk} is not on the solver grid")
        obs_steps[int(round(s))] = k
    p = np.array(p0.values, dtype=float)
    times, snaps, kinds = [], [], []

    def store(step, kind):
        times.append(t0 + step * dt)
        snaps.append(p.copy())
        kinds.append(kind)

    events = sorted(set(range(0, n_total + 1, store_stride)) | set(obs_steps) | {n_total})
    step = 0
    for target in events:
        prop.advance(p, t0 + step * dt, target - step)
        step = target
        if step in obs_steps:
            k = obs_steps[step]
            store(step, "pre")
            try:
                post = bayes_update(DensityField(grid, p), obs.values[k], obs.times[k], obs.r[k], obs.h)
            except (DegenerateEvidenceError, InstabilityError) as exc:
                raise type(exc)(f"{exc} (observation {k} at t={obs.times[k]:g})") from exc
            p[:] = post.values
            store(step, "post")
        else:
            store(step, "fp")
    meta = {"dt": dt, "t0": t0, "t_end": t_end, "n_obs": len(obs), **prop.op.meta}
    return DensityEvolution(grid, np.array(times), np.array(snaps), kinds, store_stride,
                            diagnostics=prop.diagnostics, meta=meta)
