# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled explicit stepping kernel; same contract as ``_kernels_py.advance``."""
from libc.math cimport log
from scipy.linalg.cython_blas cimport dgemv, dcopy

import numpy as np

OK = 0
BLOWUP = 1
ZERO_MASS = 2


def advance(const double[:, ::1] m, double[::1] p, double dt, Py_ssize_t nsteps, double h,
            gain=None, dy=None, Py_ssize_t renorm_every=0, Py_ssize_t step_offset=0):
    cdef int n = <int>p.shape[0]
    cdef int inc = 1
    cdef double one = 1.0
    cdef char trans = b'T'
    cdef double[::1] q = np.empty(n)
    cdef const double[::1] g
    cdef const double[::1] d
    cdef bint observed = gain is not None
    cdef Py_ssize_t k, i
    cdef double clipped = 0.0, worst = 0.0, log_norm = 0.0
    cdef double pmax = 0.0, qmax, negmass, posmass, s, c, v
    if observed:
        g = gain
        d = dy
    for i in range(n):
        if p[i] > pmax:
            pmax = p[i]
    for k in range(nsteps):
        dcopy(&n, &p[0], &inc, &q[0], &inc)
        # row-major m is the column-major transpose, so 'T' yields m @ p
        dgemv(&trans, &n, &n, &dt, &m[0, 0], &n, &p[0], &inc, &one, &q[0], &inc)
        if observed:
            c = d[k]
            for i in range(n):
                q[i] += c * g[i] * p[i]
        qmax = q[0]
        for i in range(1, n):
            if q[i] > qmax:
                qmax = q[i]
        if pmax > 0.0 and qmax > 10.0 * pmax:
            return BLOWUP, k, clipped, worst, log_norm
        negmass = 0.0
        posmass = 0.0
        for i in range(n):
            v = q[i]
            if v < 0.0:
                negmass -= v
                q[i] = 0.0
            else:
                posmass += v
        if negmass > 0.0:
            negmass *= h
            posmass *= h
            if posmass > 0.0 and negmass / posmass > worst:
                worst = negmass / posmass
            clipped += negmass
        dcopy(&n, &q[0], &inc, &p[0], &inc)
        pmax = qmax
        if renorm_every > 0 and (step_offset + k + 1) % renorm_every == 0:
            s = 0.0
            for i in range(n):
                s += p[i]
            s *= h
            if not s > 0.0:
                return ZERO_MASS, k + 1, clipped, worst, log_norm
            for i in range(n):
                p[i] /= s
            pmax /= s
            log_norm += log(s)
    return OK, nsteps, clipped, worst, log_norm

