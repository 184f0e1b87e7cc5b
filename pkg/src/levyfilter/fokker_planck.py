"""Explicit time stepping of the nonlocal Fokker-Planck equation p_t = A* p."""
from dataclasses import dataclass, field
import math

import numpy as np

from . import kernels
from .operator import (Grid1D, OperatorMatrix, assemble_drift_divergence,
                       assemble_nonlocal, assemble_operator, stability_limit)

__all__ = ["DensityField", "DensityEvolution", "InstabilityError", "Propagator",
           "init_density", "stability_limit", "step_fp", "solve_fp"]

DEFAULT_GAUSSIAN_SIGMA = 0.1
DEFAULT_STORE_STRIDE = 10


class InstabilityError(RuntimeError):
    """Explicit step blew up (pre-clip maximum grew more than tenfold)."""


@dataclass
class DensityField:
    grid: Grid1D
    values: np.ndarray
    normalized: bool = True

    @property
    def mass(self):
        return self.grid.mass(self.values)

    def normalize(self):
        m = self.mass
        if not m > 0:
            raise ValueError("cannot normalize a field with zero mass")
        return DensityField(self.grid, self.values / m, True)

    def mean(self):
        return self.grid.dx * float(self.grid.x @ self.values) / self.mass

    def variance(self):
        mu = self.mean()
        return self.grid.dx * float(((self.grid.x - mu) ** 2) @ self.values) / self.mass


@dataclass
class DensityEvolution:
    """Stored snapshots of a density on one grid.

    ``kinds`` tags each row: 'fp' for plain propagation, 'pre' / 'post'
    around a Bayes update (these share a time stamp). ``log_norm`` holds
    the accumulated log normalization for Zakai runs, so that
    exp(log_norm) * snapshot is the unnormalized solution.
    """

    grid: Grid1D
    times: np.ndarray
    snapshots: np.ndarray
    kinds: list = None
    store_stride: int = DEFAULT_STORE_STRIDE
    log_norm: np.ndarray = None
    diagnostics: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.snapshots = np.atleast_2d(np.asarray(self.snapshots, dtype=float))
        if self.kinds is None:
            self.kinds = ["fp"] * len(self.times)
        if np.any(np.diff(self.times) < 0):
            raise ValueError("snapshot times must be non-decreasing")

    def __len__(self):
        return len(self.times)

    def field(self, i):
        return DensityField(self.grid, self.snapshots[i], self.kinds[i] != "fp")

    def index_at(self, t, kind=None):
        """Index of the last snapshot stored at time ``t`` (optionally of one kind)."""
        rows = [i for i, s in enumerate(self.times)
                if abs(s - t) <= 1e-9 * max(1.0, abs(t)) and (kind is None or self.kinds[i] == kind)]
        if not rows:
            raise KeyError(f"no snapshot at t={t}")
        return rows[-1]

    def at(self, t, kind=None):
        return self.field(self.index_at(t, kind))

    def masses(self):
        return self.grid.dx * self.snapshots.sum(axis=1)

    def filtered(self):
        """Evolution without the 'pre' rows, leaving strictly increasing times."""
        keep = [i for i, k in enumerate(self.kinds) if k != "pre"]
        ln = None if self.log_norm is None else self.log_norm[keep]
        return DensityEvolution(self.grid, self.times[keep], self.snapshots[keep],
                                [self.kinds[i] for i in keep], self.store_stride, ln,
                                dict(self.diagnostics), dict(self.meta))


def _cell_average_uniform(grid, a, b):
    """Node values equal to the cell averages of the uniform density on (a, b)."""
    h = grid.dx
    lo = np.maximum(grid.x - 0.5 * h, a)
    hi = np.minimum(grid.x + 0.5 * h, b)
    return np.clip(hi - lo, 0.0, None) / (h * (b - a))


def init_density(grid, kind="gaussian", **kw):
    """Initial density on ``grid``.

    kind='gaussian'    center, sigma (default 0.1); sampled and renormalized
    kind='uniform'     a, b; node values are cell averages, so mass is exact
    kind='point_mass'  x0; value 1/dx at the nearest node
    """
    x, h = grid.x, grid.dx
    if kind == "gaussian":
        c = float(kw.get("center", 0.0))
        s = float(kw.get("sigma", DEFAULT_GAUSSIAN_SIGMA))
        if not s > 0:
            raise ValueError("gaussian sigma must be positive")
        v = np.exp(-0.5 * ((x - c) / s) ** 2)
    elif kind == "uniform":
        a, b = float(kw["a"]), float(kw["b"])
        if not a < b:
            raise ValueError("uniform init requires a < b")
        v = _cell_average_uniform(grid, a, b)
    elif kind in ("point_mass", "point"):
        x0 = float(kw.get("x0", 0.0))
        if not grid.x_min - 0.5 * h <= x0 <= grid.x_max + 0.5 * h:
            raise ValueError(f"point mass at {x0} lies off the grid")
        v = np.zeros(grid.n)
        v[grid.index_of(x0)] = 1.0 / h
    else:
        raise ValueError(f"unknown initial density kind {kind!r}")
    m = grid.mass(v)
    if not m > 0:
        raise ValueError(f"initial density {kind!r} has empty support on the grid")
    return DensityField(grid, v / m, True)


class Propagator:
    """Explicit Euler propagation with a fixed nonlocal part.

    The drift part is reassembled each step for non-autonomous drifts.
    Diagnostics accumulate over the lifetime of the propagator.
    """

    def __init__(self, grid, params, drift, dt, scheme="hybrid", inner="zeta",
                 backend=None, op=None):
        self.grid, self.params, self.drift = grid, params, drift
        self.dt, self.scheme, self.backend = float(dt), scheme, backend
        if op is None:
            op = assemble_operator(grid, params, drift, 0.0, scheme, inner)
        self.op = op
        self.limit = stability_limit(op)
        if self.dt > self.limit:
            raise ValueError(f"dt={self.dt:g} exceeds the explicit stability limit {self.limit:g}")
        self.clipped_mass = 0.0
        self.max_negative_fraction = 0.0

    @property
    def diagnostics(self):
        return {"clipped_mass": self.clipped_mass,
                "max_negative_fraction": self.max_negative_fraction,
                "stability_limit": self.limit, "backend": self.backend or kernels.BACKEND}

    def _matrix(self, t):
        if self.drift.autonomous:
            return self.op.entries
        return self.op.nonlocal_part + assemble_drift_divergence(self.grid, self.drift, t, self.scheme,
                                                                self.op.nonlocal_part[1, 0])

    def advance(self, p, t, nsteps, dt=None, gain=None, dy=None, renorm_every=0, step_offset=0):
        """Advance ``p`` in place; returns the accumulated log normalization."""
        dt = self.dt if dt is None else dt
        if nsteps <= 0:
            return 0.0
        if self.drift.autonomous and not callable(gain):
            chunks = [(0, nsteps)]
        else:
            chunks = [(k, 1) for k in range(nsteps)]
        log_norm = 0.0
        for k0, count in chunks:
            sub_gain = gain
            sub_dy = None if dy is None else dy[k0:k0 + count]
            if gain is not None and callable(gain):
                sub_gain = gain(t + k0 * dt)
            status, done, clipped, worst, ln = kernels.advance(
                self._matrix(t + k0 * dt), p, dt, count, self.grid.dx, sub_gain, sub_dy,
                renorm_every, step_offset + k0, backend=self.backend)
            self.clipped_mass += clipped
            self.max_negative_fraction = max(self.max_negative_fraction, worst)
            log_norm += ln
            if status == kernels.BLOWUP:
                raise InstabilityError(f"explicit step blew up at t={t + (k0 + done) * dt:.6g}")
            if status == kernels.ZERO_MASS:
                raise InstabilityError(f"density lost all mass at t={t + (k0 + done) * dt:.6g}")
        return log_norm


def step_fp(p, op, dt, backend=None, diagnostics=None):
    """One forward-Euler step p + dt * A* p with negative values clipped.

    If a ``diagnostics`` dict is passed, the clipped mass is added to its
    'clipped_mass' entry and 'max_negative_fraction' is updated.
    """
    if dt < 0:
        raise ValueError("dt must be non-negative")
    values = np.array(p.values, dtype=float)
    if dt > 0:
        m = op.entries if isinstance(op, OperatorMatrix) else np.asarray(op)
        status, _, clipped, worst, _ = kernels.advance(m, values, dt, 1, p.grid.dx,
                                                       backend=backend)
        if diagnostics is not None:
            diagnostics["clipped_mass"] = diagnostics.get("clipped_mass", 0.0) + clipped
            diagnostics["max_negative_fraction"] = max(
                diagnostics.get("max_negative_fraction", 0.0), worst)
        if status != kernels.OK:
            raise InstabilityError("explicit Fokker-Planck step blew up")
    return DensityField(p.grid, values, False)


def split_steps(t0, t1, dt):
    """Number of full steps of ``dt`` in [t0, t1] and the leftover step size."""
    span = t1 - t0
    n = int(math.floor(span / dt + 1e-9))
    rest = span - n * dt
    if rest <= 1e-9 * dt:
        rest = 0.0
    return n, rest


def solve_fp(p0, drift, params, t0, t1, dt, store_stride=DEFAULT_STORE_STRIDE,
             scheme="hybrid", inner="zeta", backend=None, propagator=None):
    """Propagate ``p0`` from ``t0`` to ``t1`` storing every ``store_stride`` steps."""
    if t1 < t0:
        raise ValueError("solve_fp requires t1 >= t0")
    if store_stride < 1:
        raise ValueError("store_stride must be >= 1")
    grid = p0.grid
    prop = propagator or Propagator(grid, params, drift, dt, scheme, inner, backend)
    p = np.array(p0.values, dtype=float)
    times, snaps = [t0], [p.copy()]
    nfull, rest = split_steps(t0, t1, dt)
    k = 0
    while k < nfull:
        count = min(store_stride, nfull - k)
        prop.advance(p, t0 + k * dt, count)
        k += count
        if k % store_stride == 0 or (k == nfull and rest == 0.0):
            times.append(t0 + k * dt)
            snaps.append(p.copy())
    if rest > 0.0:
        prop.advance(p, t0 + nfull * dt, 1, dt=rest)
        times.append(t1)
        snaps.append(p.copy())
    if len(times) > 1:
        times[-1] = t1
    return DensityEvolution(grid, np.array(times), np.array(snaps), None, store_stride,
                            diagnostics=prop.diagnostics,
                            meta={"dt": dt, "t0": t0, "t1": t1, **prop.op.meta})
