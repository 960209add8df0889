"""Pure numpy versions of the compiled kernels (same signatures, same layout).

Used when the extension is not built, or when ``FRACDIFF_BACKEND=python``.
Inner products go through BLAS here, so results agree with the compiled
core to round-off rather than bit-for-bit; the compensated sum is the
exception and matches exactly.
"""

import numpy as np

NAME = "python"


def neumaier_sum(x):
    sr = cr = si = ci = 0.0
    for v in np.asarray(x, dtype=np.complex128).tolist():
        re, im = v.real, v.imag
        t = sr + re
        if abs(sr) >= abs(re):
            cr += (sr - t) + re
        else:
            cr += (re - t) + sr
        sr = t
        t = si + im
        if abs(si) >= abs(im):
            ci += (si - t) + im
        else:
            ci += (im - t) + si
        si = t
    return complex(sr + cr, si + ci)


def causal_convolve(w, x, nthreads=1):
    w = np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.complex128)
    m, n = x.shape
    if w.shape[0] < n:
        raise ValueError("weight vector shorter than the signal")
    y = np.zeros((m, n), dtype=np.complex128)
    for i in range(n):
        y[:, i] = x[:, i::-1] @ w[: i + 1]
    return y


def l1_relaxation(lam, b, c, n_steps, nthreads=1):
    lam = np.asarray(lam, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] < n_steps:
        raise ValueError("need at least n_steps L1 weights")
    m = lam.shape[0]
    u = np.empty((m, n_steps + 1))
    d = np.zeros((m, n_steps + 1))
    u[:, 0] = 1.0
    denom = c + lam
    for k in range(1, n_steps + 1):
        # d[:, k-1:0:-1] pairs d_{k-1}, ..., d_1 with b_1, ..., b_{k-1}
        hist = d[:, k - 1 : 0 : -1] @ b[1:k] if k > 1 else 0.0
        u[:, k] = c * (u[:, k - 1] - hist) / denom
        d[:, k] = u[:, k] - u[:, k - 1]
    return u


def exp_convolve(decay, w_prev, w_cur, f, nthreads=1):
    f = np.asarray(f, dtype=np.complex128)
    decay = np.asarray(decay, dtype=np.float64)
    w_prev = np.asarray(w_prev, dtype=np.float64)
    w_cur = np.asarray(w_cur, dtype=np.float64)
    y = np.zeros_like(f)
    for i in range(1, f.shape[1]):
        y[:, i] = decay * y[:, i - 1] + w_prev * f[:, i - 1] + w_cur * f[:, i]
    return y
