"""Twin experiments: simulate a truth, observe it, filter, and score the estimate."""
from dataclasses import dataclass
import math

import numpy as np

from .filter_cd import DEFAULT_OBS_SPACING, run_cd_filter
from .fokker_planck import Propagator, init_density
from .levy import StableParams
from .operator import Grid1D, double_well, identity_field
from .orbit import (DEFAULT_DEADBAND, DEFAULT_WELLS, detect_transitions, match_events,
                    most_probable_orbit, sign_agreement)
from .sde import (generate_continuous_obs, generate_discrete_obs, observation_times,
                  simulate_state)
from .zakai import run_zakai

EXAMPLE_ALPHA = 1.5
EXAMPLE_EPSILON = math.sqrt(0.24)
EXAMPLE_GRID = (-2.5, 2.5, 0.05)
EXAMPLE_DT = 1e-3
EXAMPLE_R = 0.1
EXAMPLE_OBS_SCALE = math.sqrt(0.05)


@dataclass
class TwinResult:
    seed: int
    truth: object
    observations: object
    evolution: object
    orbit: object
    truth_events: list
    orbit_events: list
    sign_agreement: float
    events: dict


def example_setup(alpha=EXAMPLE_ALPHA, epsilon=EXAMPLE_EPSILON, grid=EXAMPLE_GRID):
    return Grid1D.from_spacing(*grid), StableParams(alpha, epsilon), double_well()


def score(seed, truth, obs, evo, burn_in, wells=DEFAULT_WELLS, deadband=DEFAULT_DEADBAND,
          lag_tol=0.5):
    orbit = most_probable_orbit(evo)
    ev_true = detect_transitions((truth.times, truth.states), wells, deadband)
    ev_est = detect_transitions(orbit, wells, deadband)
    agree = sign_agreement(orbit.times, orbit.x_star, truth.times, truth.states, burn_in)
    return TwinResult(seed, truth, obs, evo, orbit, ev_true, ev_est, agree,
                      match_events(ev_est, ev_true, lag_tol))


def discrete_twin(seed, T=10.0, x0=-1.0, init=None, spacing=DEFAULT_OBS_SPACING, r=EXAMPLE_R,
                  dt=EXAMPLE_DT, alpha=EXAMPLE_ALPHA, epsilon=EXAMPLE_EPSILON, grid=EXAMPLE_GRID,
                  store_stride=10, burn_in=0.5, propagator=None):
    """Example-1 style twin run with discrete observations y_k = x_k + sqrt(R) v_k."""
    g, params, drift = example_setup(alpha, epsilon, grid)
    h = identity_field()
    truth = simulate_state(x0, drift, params, dt, T, seed)
    obs = generate_discrete_obs(truth, h, r, observation_times(0.0, truth.times[-1], spacing), seed)
    p0 = init_density(g, **(init or {"kind": "gaussian", "center": -1.0, "sigma": 0.1}))
    prop = propagator or Propagator(g, params, drift, dt)
    evo = run_cd_filter(p0, obs, drift, params, dt, T, store_stride=store_stride, propagator=prop)
    return score(seed, truth, obs, evo, burn_in)


def continuous_twin(seed, T=50.0, x0=-1.0, init=None, noise_scale=EXAMPLE_OBS_SCALE,
                    dt=EXAMPLE_DT, alpha=EXAMPLE_ALPHA, epsilon=EXAMPLE_EPSILON, grid=EXAMPLE_GRID,
                    store_stride=10, burn_in=0.5, propagator=None, whiten=True):
    """Example-2 style twin run with dY = X dt + scale dW."""
    g, params, drift = example_setup(alpha, epsilon, grid)
    h = identity_field()
    truth = simulate_state(x0, drift, params, dt, T, seed)
    obs = generate_continuous_obs(truth, h, noise_scale, dt, seed)
    p0 = init_density(g, **(init or {"kind": "gaussian", "center": -1.0, "sigma": 0.1}))
    prop = propagator or Propagator(g, params, drift, dt)
    evo = run_zakai(p0, obs, drift, params, dt, T, store_stride=store_stride, propagator=prop,
                    whiten=whiten)
    return score(seed, truth, obs, evo, burn_in)


def in_domain(truth, grid=EXAMPLE_GRID):
    """Truth never overflowed and stayed inside the computational domain."""
    lo, hi = grid[0], grid[1]
    return (not truth.overflow) and bool(np.all((truth.states > lo) & (truth.states < hi)))
