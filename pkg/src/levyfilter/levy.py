"""Symmetric alpha-stable law: jump-measure constant, jump density and sampling.

Random streams
--------------
Every experiment is driven by one integer scenario seed. Independent
substreams are derived with ``numpy.random.SeedSequence(seed,
spawn_key=(stream,))`` where ``stream`` is one of the ``STREAM_*``
constants below, so state noise, observation noise, particle noise and
Monte-Carlo oracles never share random numbers.
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy.special import gamma

STREAM_STATE = 0
STREAM_OBS = 1
STREAM_PARTICLES = 2
STREAM_ENSEMBLE = 3


def substream(seed, stream):
    """Return the generator for substream ``stream`` of scenario ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(ss))


def _check_alpha(alpha):
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha!r}")


@dataclass(frozen=True)
class StableParams:
    """Stability index ``alpha`` and intensity ``epsilon`` of eps * L^alpha."""

    alpha: float
    epsilon: float = 1.0

    def __post_init__(self):
        _check_alpha(self.alpha)
        if not self.epsilon >= 0.0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon!r}")

    @property
    def intensity(self):
        """Jump-measure multiplier epsilon**alpha contributed by the scale."""
        return self.epsilon ** self.alpha


def levy_constant(alpha):
    """Constant C_alpha of the symmetric alpha-stable jump measure.

    C_alpha = alpha * Gamma((1 + alpha) / 2) / (2**(1 - alpha) sqrt(pi) Gamma(1 - alpha / 2)),
    normalized so that the Levy motion has characteristic function
    exp(-t |xi|**alpha).
    """
    _check_alpha(alpha)
    return (alpha * gamma(0.5 * (1.0 + alpha))
            / (2.0 ** (1.0 - alpha) * math.sqrt(math.pi) * gamma(1.0 - 0.5 * alpha)))


@dataclass(frozen=True)
class JumpMeasure:
    alpha: float
    c_alpha: float

    @classmethod
    def from_alpha(cls, alpha):
        return cls(alpha, levy_constant(alpha))

    def __post_init__(self):
        _check_alpha(self.alpha)
        if not self.c_alpha > 0:
            raise ValueError("c_alpha must be positive")
        if not math.isclose(self.c_alpha, levy_constant(self.alpha), rel_tol=1e-12):
            raise ValueError("c_alpha does not match the closed form for this alpha")


def jump_density(measure, y):
    """Density C_alpha |y|^-(1+alpha) of the jump measure (y != 0)."""
    y = np.asarray(y, dtype=float)
    if np.any(y == 0):
        raise ValueError("jump density is singular at y = 0")
    out = measure.c_alpha * np.abs(y) ** (-(1.0 + measure.alpha))
    return out[()] if out.ndim == 0 else out


def cms_transform(angle, expo, alpha):
    """Chambers-Mallows-Stuck map for symmetric stable variates.

    ``angle`` is uniform on (-pi/2, pi/2) and ``expo`` standard exponential.
    The result is standard symmetric alpha-stable with characteristic
    function exp(-|xi|**alpha), and it is odd in ``angle``.
    """
    angle = np.asarray(angle, dtype=float)
    if alpha == 1.0:
        return np.tan(angle)
    expo = np.asarray(expo, dtype=float)
    return (np.sin(alpha * angle) / np.cos(angle) ** (1.0 / alpha)
            * (np.cos((1.0 - alpha) * angle) / expo) ** ((1.0 - alpha) / alpha))


def standard_stable(alpha, n, rng):
    """Draw ``n`` standard symmetric alpha-stable variates from ``rng``.

    Each call consumes ``n`` uniforms then ``n`` exponentials.
    """
    _check_alpha(alpha)
    angle = rng.uniform(-0.5 * math.pi, 0.5 * math.pi, size=n)
    expo = rng.standard_exponential(size=n)
    return cms_transform(angle, expo, alpha)


def stable_blocks(alpha, n, rng, block=1024):
    """``n`` standard stable variates drawn in whole blocks of ``block``.

    Unlike :func:`standard_stable`, the first ``m`` values are the same for
    every ``n >= m``, so a longer run extends a shorter one.
    """
    nblocks = -(-n // block)
    out = np.concatenate([standard_stable(alpha, block, rng) for _ in range(nblocks)]) \
        if nblocks else np.empty(0)
    return out[:n]


def increment_scale(params, dt):
    """Factor epsilon * dt**(1/alpha) turning standard draws into increments."""
    return params.epsilon * dt ** (1.0 / params.alpha)


def sample_stable_increments(params, dt, n, seed):
    """Increments of epsilon * L^alpha over ``n`` steps of length ``dt``.

    ``seed`` is either an integer or a ``numpy.random.Generator``; an integer
    gives bit-reproducible output.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return increment_scale(params, dt) * standard_stable(params.alpha, n, rng)
