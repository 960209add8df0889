# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops.  Signatures mirror :mod:`fracdiff._pykernels` exactly.

Every array argument is mode-major: one row per spectral mode, one column per
time node.  Rows are independent, so the ``prange`` over rows never changes
the arithmetic performed on any single row; results do not depend on the
thread count.
"""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange

cnp.import_array()

NAME = "cython"


def neumaier_sum(const double complex[::1] x):
    """Compensated sum of ``x`` in index order (Neumaier's variant of Kahan)."""
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double sr = 0.0, cr = 0.0, si = 0.0, ci = 0.0, v, t
    for i in range(n):
        v = x[i].real
        t = sr + v
        if abs(sr) >= abs(v):
            cr += (sr - t) + v
        else:
            cr += (v - t) + sr
        sr = t
        v = x[i].imag
        t = si + v
        if abs(si) >= abs(v):
            ci += (si - t) + v
        else:
            ci += (v - t) + si
        si = t
    return complex(sr + cr, si + ci)


def causal_convolve(const double[::1] w, const double complex[:, ::1] x, int nthreads=1):
    """``y[r, n] = sum_{j=0}^{n} w[j] * x[r, n - j]`` with ascending ``j``."""
    cdef Py_ssize_t m = x.shape[0], n = x.shape[1]
    if w.shape[0] < n:
        raise ValueError("weight vector shorter than the signal")
    out = np.zeros((m, n), dtype=np.complex128)
    cdef double complex[:, ::1] y = out
    cdef Py_ssize_t r, i, j
    cdef double accr, acci
    for r in prange(m, nogil=True, num_threads=max(nthreads, 1), schedule="static"):
        for i in range(n):
            accr = 0.0
            acci = 0.0
            for j in range(i + 1):
                accr = accr + w[j] * x[r, i - j].real
                acci = acci + w[j] * x[r, i - j].imag
            y[r, i] = accr + 1j * acci
    return out


def l1_relaxation(const double[::1] lam, const double[::1] b, double c,
                  Py_ssize_t n_steps, int nthreads=1):
    """Implicit L1 stepping of ``D^beta u = -lam u`` from ``u(0) = 1``.

    ``b`` holds the L1 weights ``b_j`` and ``c = dt**-beta / Gamma(2 - beta)``.
    Returns an array of shape ``(len(lam), n_steps + 1)``.
    """
    cdef Py_ssize_t m = lam.shape[0]
    if b.shape[0] < n_steps:
        raise ValueError("need at least n_steps L1 weights")
    out = np.empty((m, n_steps + 1), dtype=np.float64)
    diff = np.zeros((m, n_steps + 1), dtype=np.float64)
    cdef double[:, ::1] u = out
    cdef double[:, ::1] d = diff
    cdef Py_ssize_t r, k, j
    cdef double hist, denom
    for r in prange(m, nogil=True, num_threads=max(nthreads, 1), schedule="static"):
        u[r, 0] = 1.0
        denom = c + lam[r]
        for k in range(1, n_steps + 1):
            hist = 0.0
            for j in range(1, k):
                hist = hist + b[j] * d[r, k - j]
            u[r, k] = c * (u[r, k - 1] - hist) / denom
            d[r, k] = u[r, k] - u[r, k - 1]
    return out


def exp_convolve(const double[::1] decay, const double[::1] w_prev,
                 const double[::1] w_cur, const double complex[:, ::1] f,
                 int nthreads=1):
    """Running integral ``I_n = decay * I_{n-1} + w_prev * f_{n-1} + w_cur * f_n``."""
    cdef Py_ssize_t m = f.shape[0], n = f.shape[1]
    out = np.zeros((m, n), dtype=np.complex128)
    cdef double complex[:, ::1] y = out
    cdef Py_ssize_t r, i
    for r in prange(m, nogil=True, num_threads=max(nthreads, 1), schedule="static"):
        for i in range(1, n):
            y[r, i] = decay[r] * y[r, i - 1] + w_prev[r] * f[r, i - 1] + w_cur[r] * f[r, i]
    return out
