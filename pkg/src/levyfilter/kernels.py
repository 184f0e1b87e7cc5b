"""Backend selection for the explicit stepping kernel.

The compiled extension is used when it imports; otherwise the numpy
fallback. ``LEVYFILTER_BACKEND=python`` forces the fallback.
"""
import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("LEVYFILTER_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

OK, BLOWUP, ZERO_MASS = _kernels_py.OK, _kernels_py.BLOWUP, _kernels_py.ZERO_MASS


def get_backend(name=None):
    """Return the kernel module for ``name`` ('cython' or 'python'), default active."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")


def advance(m, p, dt, nsteps, h, gain=None, dy=None, renorm_every=0, step_offset=0, backend=None):
    impl = get_backend(backend)
    m = np.ascontiguousarray(m, dtype=float)
    if gain is not None:
        gain = np.ascontiguousarray(gain, dtype=float)
        dy = np.ascontiguousarray(dy, dtype=float)
    return impl.advance(m, p, float(dt), int(nsteps), float(h), gain, dy,
                        int(renorm_every), int(step_offset))

