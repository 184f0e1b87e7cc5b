"""Pure-numpy explicit stepping kernel (fallback for the compiled core)."""
import math

import numpy as np

OK = 0
BLOWUP = 1
ZERO_MASS = 2


def advance(m, p, dt, nsteps, h, gain=None, dy=None, renorm_every=0, step_offset=0):
    """Advance ``p`` in place by ``nsteps`` explicit steps.

    Each step is p <- p + dt * (m @ p) [+ gain * p * dy[k]], then negative
    values are clipped. Returns ``(status, steps_done, clipped_mass,
    max_negative_fraction, log_norm)``; a nonzero status stops the loop
    with ``p`` left at the last good state.
    """
    clipped = 0.0
    worst = 0.0
    log_norm = 0.0
    pmax = float(p.max()) if p.size else 0.0
    for k in range(nsteps):
        q = p + dt * (m @ p)
        if gain is not None:
            q += (dy[k] * gain) * p
        qmax = float(q.max())
        if pmax > 0.0 and qmax > 10.0 * pmax:
            return BLOWUP, k, clipped, worst, log_norm
        neg = q < 0.0
        if neg.any():
            negmass = -h * float(q[neg].sum())
            posmass = h * float(q[~neg].sum())
            if posmass > 0.0:
                worst = max(worst, negmass / posmass)
            clipped += negmass
            q[neg] = 0.0
        p[:] = q
        pmax = qmax
        if renorm_every > 0 and (step_offset + k + 1) % renorm_every == 0:
            s = h * float(p.sum())
            if not s > 0.0:
                return ZERO_MASS, k + 1, clipped, worst, log_norm
            p /= s
            pmax /= s
            log_norm += math.log(s)
    return OK, nsteps, clipped, worst, log_norm

