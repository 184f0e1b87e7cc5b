"""Most probable orbits and metastable transition events."""
from dataclasses import dataclass, field

import numpy as np

DEFAULT_WELLS = (-1.0, 1.0)
DEFAULT_DEADBAND = 0.3
TIE_RULE = "nearest-to-previous; first snapshot smallest x"


@dataclass
class MostProbableOrbit:
    times: np.ndarray
    x_star: np.ndarray
    peak_value: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True)
class TransitionEvent:
    t_cross: float
    from_well: float
    to_well: float
    dwell_before: float


def _argmax_with_ties(values, x, previous):
    top = values.max()
    cand = np.flatnonzero(values == top)
    if len(cand) == 1 or previous is None:
        return int(cand[0])
    return int(cand[np.argmin(np.abs(x[cand] - previous))])


def _parabolic(values, x, i):
    if i == 0 or i == len(values) - 1:
        return x[i]
    a, b, c = values[i - 1], values[i], values[i + 1]
    denom = a - 2.0 * b + c
    if denom >= 0:
        return x[i]
    return x[i] + 0.5 * (a - c) / denom * (x[1] - x[0])


def most_probable_orbit(evo, refine=False, include_pre=False):
    """Argmax of each snapshot.

    Rows tagged 'pre' (prior side of a Bayes update) are skipped unless
    ``include_pre``. Exact ties go to the node nearest the previous
    maximizer, and to the smallest x on the first snapshot. ``refine``
    fits a parabola through the three nodes around the maximum.
    """
    if len(evo) == 0:
        raise ValueError("empty evolution")
    x = evo.grid.x
    rows = [i for i, k in enumerate(evo.kinds) if include_pre or k != "pre"]
    times, xs, peaks = [], [], []
    previous = None
    for i in rows:
        v = evo.snapshots[i]
        if not v.max() > 0:
            raise ValueError(f"snapshot at t={evo.times[i]:g} has no positive mass")
        j = _argmax_with_ties(v, x, previous)
        previous = x[j]
        times.append(evo.times[i])
        xs.append(_parabolic(v, x, j) if refine else x[j])
        peaks.append(v[j])
    return MostProbableOrbit(np.array(times), np.array(xs), np.array(peaks),
                             {"tie_rule": TIE_RULE, "refine": refine})


def detect_transitions(orbit, wells=DEFAULT_WELLS, deadband=DEFAULT_DEADBAND, min_dwell=0.0):
    """Hysteresis labelling of well changes.

    A series commits to a well once it comes within ``deadband`` of that
    well's center; an event is emitted each time the committed well
    changes, stamped with the time of first entry. With ``min_dwell > 0`` a
    new well only counts once the series has stayed out of every other
    well's band for that long, which debounces argmax flips of a nearly
    balanced bimodal density. ``orbit`` is a :class:`MostProbableOrbit` or
    a (times, x) pair.
    """
    if isinstance(orbit, MostProbableOrbit):
        times, xs = orbit.times, orbit.x_star
    else:
        times, xs = orbit
    wells = np.asarray(sorted(wells), dtype=float)
    if len(np.unique(wells)) != len(wells):
        raise ValueError("wells must be distinct")
    if len(wells) > 1 and not deadband < 0.5 * np.min(np.diff(wells)):
        raise ValueError("deadband must be smaller than half the well separation")
    events = []
    current, since = None, None
    pending, entered = None, None
    for t, xv in zip(times, xs):
        t = float(t)
        d = np.abs(wells - xv)
        k = int(np.argmin(d))
        if d[k] > deadband + 1e-12:  # rounding would break mirror symmetry at the edge
            continue
        w = float(wells[k])
        if w != pending:
            pending, entered = w, t
        if w == current or t - entered < min_dwell:
            continue
        if current is not None:
            events.append(TransitionEvent(entered, current, w, entered - since))
        current, since = w, entered
    return events


def sign_agreement(times_a, xa, times_b, xb, t_min=0.0):
    """Fraction of times in ``times_a`` (>= t_min) where sign(xa) equals sign(xb).

    ``xb`` is sampled at the nearest time of ``times_b``. NaN when no time
    survives the burn-in.
    """
    times_a = np.asarray(times_a)
    keep = times_a >= t_min - 1e-12
    if not keep.any():
        return float("nan")
    idx = np.clip(np.searchsorted(times_b, times_a[keep] - 1e-9), 0, len(times_b) - 1)
    return float(np.mean(np.sign(np.asarray(xa)[keep]) == np.sign(np.asarray(xb)[idx])))


def match_events(events_est, events_true, tol=0.5):
    """Count agreement plus per-event crossing-time lags (paired in order)."""
    same = len(events_est) == len(events_true)
    lags = [abs(a.t_cross - b.t_cross) for a, b in zip(events_est, events_true)]
    directions = all(a.to_well == b.to_well for a, b in zip(events_est, events_true))
    ok = same and directions and all(l <= tol for l in lags)
    return {"count_est": len(events_est), "count_true": len(events_true),
            "count_match": same, "lags": lags, "matched": ok}
