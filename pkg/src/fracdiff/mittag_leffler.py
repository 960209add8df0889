"""One-parameter Mittag-Leffler function ``E_beta(z) = sum_m z**m / Gamma(beta*m + 1)`` for real ``z <= 0``.

Three evaluation regions, chosen by measured overlap agreement:

* ``|z| <= SERIES_RADIUS``: the power series, which has no cancellation there.
* ``z <= -ASYMPTOTIC_MIN``: the algebraic expansion ``-sum_m z**-m / Gamma(1 - beta*m)``
  (plus the two exponential saddle terms when ``beta > 1``), optimally
  truncated and used only where the smallest term is below
  ``ASYMPTOTIC_TOL`` relative to the sum.
* everything else: the real-line integral

      E_beta(-x) = sgn / (pi beta) * int_0^{delta_max} exp(-(x u(delta))**(1/beta)) d delta
                   + [beta > 1] * (2/beta) exp(t cos(pi/beta)) cos(t sin(pi/beta)),

  with ``u = sin(delta) / sin(delta_max - delta)``, ``t = x**(1/beta)``,
  ``delta_max = beta*pi`` and ``sgn = 1`` for ``beta < 1``,
  ``delta_max = (2-beta)*pi`` and ``sgn = -1`` for ``beta > 1``.  It is the
  Laplace-type representation of the function after the substitution that
  flattens the Lorentzian factor; the integrand is bounded in ``[0, 1]``.
  Gauss-Legendre panels graded geometrically toward both ends plus a uniform
  interior split resolve it to near round-off.
"""

import math

import numpy as np
from scipy.special import gammaln, rgamma

SERIES_RADIUS = 1.0
ASYMPTOTIC_MIN = 20.0
ASYMPTOTIC_TOL = 1e-13
ASYMPTOTIC_TERMS = 80

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def _panel_nodes(n_graded=40, n_uniform=32):
    half = 0.5 * np.concatenate([[0.0], 2.0 ** np.arange(-n_graded + 1, 1)])
    edges = np.unique(np.concatenate([half, 1.0 - half, np.linspace(0.0, 1.0, n_uniform + 1)]))
    a, b = edges[:-1], edges[1:]
    x = (0.5 * (b - a))[:, None] * _GL_X[None, :] + (0.5 * (a + b))[:, None]
    w = (0.5 * (b - a))[:, None] * _GL_W[None, :]
    return x.ravel(), w.ravel()


_UNIT_X, _UNIT_W = _panel_nodes()


def _check_beta(beta):
    beta = float(beta)
    if not 0.0 < beta < 2.0:
        raise ValueError(f"Mittag-Leffler order must lie in (0, 2), got {beta}")
    return beta


def ml_series(beta, z):
    """Power series, intended for ``|z| <= 1``."""
    z = np.asarray(z, dtype=float)
    zmax = float(np.max(np.abs(z))) if z.size else 0.0
    # enough terms for |z|**m / Gamma(beta m + 1) < 1e-18
    m_max = 8
    while m_max < 20000 and m_max * math.log(max(zmax, 1e-300)) - gammaln(beta * m_max + 1) > -41.5:
        m_max *= 2
    m = np.arange(m_max + 1)
    coef = rgamma(beta * m + 1.0)
    out = np.zeros(z.shape)
    # Horner from the highest power keeps the evaluation order fixed
    for c in coef[::-1]:
        out = out * z + c
    return out


def ml_integral(beta, z, chunk=256):
    """Real-line integral representation, any ``z <= 0``."""
    z = np.asarray(z, dtype=float)
    x = -z.ravel()
    dmax = beta * math.pi if beta < 1 else (2.0 - beta) * math.pi
    sgn = 1.0 if beta < 1 else -1.0
    d = dmax * _UNIT_X
    w = dmax * _UNIT_W
    with np.errstate(divide="ignore"):
        u = np.sin(d) / np.sin(dmax - d)
    out = np.empty(x.shape)
    for lo in range(0, x.size, chunk):
        xs = x[lo : lo + chunk, None]
        with np.errstate(over="ignore", invalid="ignore"):
            arg = (xs * u[None, :]) ** (1.0 / beta)
        arg = np.where(np.isnan(arg), np.inf, arg)
        out[lo : lo + chunk] = sgn * (np.exp(-arg) @ w) / (math.pi * beta)
    if beta > 1:
        t = x ** (1.0 / beta)
        out += (2.0 / beta) * np.exp(t * math.cos(math.pi / beta)) * np.cos(t * math.sin(math.pi / beta))
    return out.reshape(z.shape)


def ml_asymptotic(beta, z):
    """Optimally truncated algebraic expansion; returns ``(value, error_estimate)``."""
    z = np.asarray(z, dtype=float)
    zf = z.ravel()
    m = np.arange(1, ASYMPTOTIC_TERMS + 1)
    coef = -rgamma(1.0 - beta * m)
    with np.errstate(over="ignore", divide="ignore"):
        terms = coef[None, :] * zf[:, None] ** (-m[None, :].astype(float))
    mags = np.abs(terms)
    # the series is divergent: cut at the smallest nonzero term
    ranked = np.where(mags > 0, mags, np.inf)
    cut = np.argmin(ranked, axis=1)
    mask = m[None, :] - 1 < cut[:, None]
    value = np.sum(np.where(mask, terms, 0.0), axis=1)
    err = ranked[np.arange(zf.size), cut]
    err = np.where(np.isfinite(err), err, 0.0)
    if beta > 1:
        t = (-zf) ** (1.0 / beta)
        value = value + (2.0 / beta) * np.exp(t * math.cos(math.pi / beta)) * np.cos(t * math.sin(math.pi / beta))
    return value.reshape(z.shape), err.reshape(z.shape)


def region(beta, z):
    """Label of the evaluation branch used for each ``z``: ``series``, ``integral`` or ``asymptotic``."""
    beta = _check_beta(beta)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    labels = np.full(z.shape, "integral", dtype=object)
    labels[np.abs(z) <= SERIES_RADIUS] = "series"
    far = z <= -ASYMPTOTIC_MIN
    if np.any(far):
        val, err = ml_asymptotic(beta, z[far])
        ok = err <= ASYMPTOTIC_TOL * np.abs(val)
        sub = labels[far]
        sub[ok] = "asymptotic"
        labels[far] = sub
    return labels


def mittag_leffler(beta, z):
    """``E_beta(z)`` for ``0 < beta < 2`` and real ``z <= 0`` (scalar or array)."""
    beta = _check_beta(beta)
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z > 0) or np.any(np.isnan(z)):
        raise ValueError("mittag_leffler is implemented for real z <= 0 only")
    if beta == 1.0:
        out = np.exp(z)
        return float(out[0]) if scalar else out
    out = np.empty(z.shape)
    near = np.abs(z) <= SERIES_RADIUS
    if np.any(near):
        out[near] = ml_series(beta, z[near])
    rest = ~near
    if np.any(rest):
        zr = z[rest]
        vals = np.empty(zr.shape)
        far = zr <= -ASYMPTOTIC_MIN
        todo = ~far
        if np.any(far):
            av, err = ml_asymptotic(beta, zr[far])
            ok = err <= ASYMPTOTIC_TOL * np.abs(av)
            sub = np.empty(av.shape)
            sub[ok] = av[ok]
            if np.any(~ok):
                sub[~ok] = ml_integral(beta, zr[far][~ok])
            vals[far] = sub
        if np.any(todo):
            vals[todo] = ml_integral(beta, zr[todo])
        out[rest] = vals
    return float(out[0]) if scalar else out
