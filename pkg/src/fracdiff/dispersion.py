"""Characteristic polynomials, solution bases and dispersion relations ``E(k)``.

A translation-invariant linear evolution ``f(D_t, grad) psi = 0`` becomes, per
Fourier mode, ``f(D_t, i k) F psi = 0``.  When ``f(., ik)`` has exactly one
simple zero in the closed left half plane that zero is ``E(k)`` and every mode
evolves as ``exp(t E(k))``.  This module finds and classifies those zeros and
differentiates ``E`` at ``k = 0`` to obtain cumulant growth rates.
"""

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .fracops import FracOrder, weyl_multiplier

UNIQUE = "unique"
MULTIPLE = "multiple_lhp_zeros"
NONSIMPLE = "nonsimple_zero"
NO_ZERO = "no_lhp_zero"

_EPS = np.finfo(float).eps


class CharPolynomial:
    """``f(s, ik) = sum_p c_p(k) s**p`` with coefficients given in descending powers of ``s``.

    ``coefficients`` is either a fixed sequence or a callable mapping a
    wavevector (array of length ``dim``) to such a sequence.
    """

    def __init__(self, coefficients, dim=1):
        self.dim = dim
        if callable(coefficients):
            self._fn = coefficients
        else:
            fixed = np.asarray(coefficients, dtype=np.complex128)
            self._fn = lambda k: fixed

    def at(self, k):
        k = np.atleast_1d(np.asarray(k, dtype=float))
        c = np.atleast_1d(np.asarray(self._fn(k), dtype=np.complex128))
        if c.size < 2:
            raise ValueError("characteristic polynomial must have degree >= 1")
        if c[0] == 0:
            raise ValueError(f"leading coefficient vanishes at k={k.tolist()}")
        return c

    def degree(self, k=0.0):
        return self.at(k).size - 1

    def __call__(self, s, k):
        return np.polyval(self.at(k), s)

    @classmethod
    def from_k_polynomials(cls, rows):
        """1-D polynomial whose ``s**p`` coefficient is itself a polynomial in ``k``.

        ``rows`` lists, in descending powers of ``s``, ascending ``k``
        coefficients; e.g. ``[[1], [0, 0, 1]]`` is ``s + k**2``.
        """
        table = [np.asarray(r, dtype=np.complex128) for r in rows]

        def coeffs(k):
            kk = float(np.atleast_1d(k)[0])
            return [np.polynomial.polynomial.polyval(kk, r) for r in table]

        return cls(coeffs, dim=1)


@dataclass(frozen=True)
class SolutionBasis:
    """Roots ``s_j`` with multiplicities ``d_j``; basis ``t**(l-1) exp(s_j t)``."""

    roots: tuple
    multiplicities: tuple

    @property
    def n_constants(self):
        return sum(self.multiplicities)

    def functions(self):
        out = []
        for s, d in zip(self.roots, self.multiplicities):
            for ell in range(d):
                out.append(lambda t, s=s, ell=ell: np.asarray(t, dtype=float) ** ell * np.exp(s * np.asarray(t)))
        return out

    def evaluate(self, coefficients, t):
        """``sum_{j,l} a_{jl} t**(l-1) exp(s_j t)`` for a flat coefficient list."""
        funcs = self.functions()
        if len(coefficients) != len(funcs):
            raise ValueError(f"need {len(funcs)} coefficients, got {len(coefficients)}")
        return sum(a * f(t) for a, f in zip(coefficients, funcs))


def _companion_roots(c):
    n = c.size - 1
    comp = np.zeros((n, n), dtype=np.complex128)
    comp[0, :] = -c[1:] / c[0]
    if n > 1:
        comp[np.arange(1, n), np.arange(n - 1)] = 1.0
    roots = np.linalg.eigvals(comp)
    if not np.all(np.isfinite(roots)):
        raise NumericalError("dispersion", f"companion eigenvalues did not converge for coefficients {c}")
    return roots


def _cluster_tol(d, centre):
    # a d-fold root is only resolved to about eps**(1/d)
    return max(1e-8, 10.0 * _EPS ** (1.0 / d)) * max(1.0, abs(centre))


def _cluster(roots):
    """Group eigenvalues scattered around a common multiple root.

    For each seed the largest set of its nearest neighbours whose spread about
    the centroid is within :func:`_cluster_tol` for that set size is merged.
    """
    remaining = sorted(roots, key=lambda r: (r.real, r.imag))
    groups = []
    while remaining:
        seed = remaining[0]
        near = sorted(remaining, key=lambda r: abs(r - seed))
        for d in range(len(near), 0, -1):
            members = near[:d]
            centre = np.mean(members)
            if d == 1 or max(abs(r - centre) for r in members) <= _cluster_tol(d, centre):
                break
        for r in members:
            remaining.remove(r)
        groups.append(members)
    return groups


def _polish(c, s, d):
    """One Newton step on the (d-1)-th derivative, kept only if it helps."""
    p = c
    for _ in range(d - 1):
        p = np.polyder(p)
    dp = np.polyder(p)
    f, df = np.polyval(p, s), np.polyval(dp, s)
    if df != 0:
        cand = s - f / df
        if abs(np.polyval(p, cand)) < abs(f):
            return cand
    return s


def polynomial_roots(coefficients):
    """Roots and multiplicities of a polynomial (descending coefficients)."""
    c = np.atleast_1d(np.asarray(coefficients, dtype=np.complex128))
    if c.size < 2:
        raise ValueError("polynomial degree must be >= 1")
    if c[0] == 0:
        raise ValueError("leading coefficient must be nonzero")
    groups = _cluster(_companion_roots(c))
    roots = [complex(_polish(c, complex(np.mean(g)), len(g))) for g in groups]
    mults = [len(g) for g in groups]
    order = sorted(range(len(roots)), key=lambda i: (roots[i].real, roots[i].imag))
    return tuple(roots[i] for i in order), tuple(mults[i] for i in order)


def ode_solution_basis(poly, k=0.0):
    if isinstance(poly, CharPolynomial):
        c = poly.at(k)
    else:
        c = np.asarray(poly, dtype=np.complex128)
    roots, mults = polynomial_roots(c)
    return SolutionBasis(roots, mults)


class DispersionRelation:
    """Base for ``E(k)``; subclasses implement :meth:`evaluate` on ``(n, dim)`` wavevectors."""

    dim = 1
    kind = "abstract"

    def evaluate(self, kvecs):
        raise NotImplementedError

    def status(self, kvecs):
        return np.full(len(_as_kvecs(kvecs, self.dim)), UNIQUE, dtype=object)

    def on_grid(self, grid):
        if grid.dim != self.dim:
            raise ValueError(f"dispersion is {self.dim}-D but grid is {grid.dim}-D")
        kv = np.stack([k.ravel() for k in grid.wavenumbers], axis=-1)
        return np.asarray(self.evaluate(kv), dtype=np.complex128).reshape(grid.shape)

    def status_on_grid(self, grid):
        kv = np.stack([k.ravel() for k in grid.wavenumbers], axis=-1)
        return np.asarray(self.status(kv), dtype=object).reshape(grid.shape)

    def __call__(self, k):
        kv = _as_kvecs(k, self.dim)
        out = np.asarray(self.evaluate(kv), dtype=np.complex128)
        return out[0] if np.ndim(k) == 0 or (np.ndim(k) == 1 and self.dim > 1 and len(k) == self.dim) else out


def _as_kvecs(k, dim):
    k = np.asarray(k, dtype=float)
    if k.ndim == 0:
        k = k.reshape(1, 1)
    elif k.ndim == 1:
        k = k.reshape(-1, 1) if dim == 1 else k.reshape(1, dim)
    if k.shape[-1] != dim:
        raise ValueError(f"wavevectors must have {dim} components")
    return k


@dataclass(frozen=True)
class ClosedDispersion(DispersionRelation):
    """``E(k) = -i v.k - D k.k + i mu3 sum_j k_j**3`` (drift, diffusion, skew)."""

    drift: tuple = (0.0,)
    diffusivity: float = 0.0
    mu3: float = 0.0
    dim: int = 1
    kind = "closed"

    def __post_init__(self):
        v = np.broadcast_to(np.asarray(self.drift, dtype=float), (self.dim,))
        object.__setattr__(self, "drift", tuple(float(x) for x in v))
        if self.diffusivity < 0:
            raise ValueError("diffusivity must be nonnegative")

    def evaluate(self, kvecs):
        k = _as_kvecs(kvecs, self.dim)
        v = np.asarray(self.drift)
        return -1j * (k @ v) - self.diffusivity * np.sum(k * k, axis=-1) + 1j * self.mu3 * np.sum(k**3, axis=-1)


@dataclass(frozen=True)
class WeylDispersion(DispersionRelation):
    """``E(k) = -(k.k)**(1/beta)``: the zero of ``(-1)**[beta] D_W^beta - k.k``."""

    beta: float = 1.0
    dim: int = 1
    kind = "weyl"

    def __post_init__(self):
        FracOrder(self.beta)

    def evaluate(self, kvecs):
        k = _as_kvecs(kvecs, self.dim)
        return -(np.sum(k * k, axis=-1) ** (1.0 / self.beta)) + 0j


def weyl_dispersion(beta, k, check=True):
    """``E(k) = -(k.k)**(1/beta)`` for ``0 < beta < 2``.

    With ``check`` the characteristic relation ``(-1)**[beta] exp(-i pi r) E**beta = k.k``
    is re-evaluated through :func:`fracops.weyl_multiplier` (branch cut on the
    positive real axis) and must hold to 1e-12 relative.
    """
    order = FracOrder(beta)
    kk = float(np.sum(np.asarray(k, dtype=float) ** 2))
    e = -(kk ** (1.0 / order.beta))
    if check and e != 0:
        lhs = (-1) ** order.int_part * weyl_multiplier(e, order)
        if abs(lhs - kk) > 1e-12 * kk:
            raise NumericalError("dispersion", f"Weyl relation residual {abs(lhs - kk):.3e} at k.k={kk}")
    return complex(e)


@dataclass(frozen=True, eq=False)
class TabulatedDispersion(DispersionRelation):
    """``E`` sampled at explicit wavevectors; evaluation only at those points."""

    k: np.ndarray
    values: np.ndarray
    statuses: np.ndarray = None
    dim: int = 1
    kind = "tabulated"

    def __post_init__(self):
        k = _as_kvecs(self.k, self.dim)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.complex128).ravel())
        if self.statuses is None:
            object.__setattr__(self, "statuses", np.full(len(k), UNIQUE, dtype=object))
        else:
            object.__setattr__(self, "statuses", np.asarray(self.statuses, dtype=object).ravel())
        if not (len(k) == self.values.size == self.statuses.size):
            raise ValueError("k, values and statuses must have equal length")

    def _lookup(self, kvecs):
        kv = _as_kvecs(kvecs, self.dim)
        idx = []
        for q in kv:
            dist = np.max(np.abs(self.k - q), axis=-1)
            i = int(np.argmin(dist))
            if dist[i] > 1e-12 * max(1.0, float(np.max(np.abs(q)))):
                raise KeyError(f"k={q.tolist()} is not tabulated")
            idx.append(i)
        return np.array(idx, dtype=int)

    def evaluate(self, kvecs):
        return self.values[self._lookup(kvecs)]

    def status(self, kvecs):
        return self.statuses[self._lookup(kvecs)]


@dataclass(frozen=True, eq=False)
class PolyRootDispersion(TabulatedDispersion):
    """``E(k)`` selected from polynomial roots, with per-k classification.

    Off-table wavevectors are solved on demand, continuing from the nearest
    tabulated root.
    """

    poly: CharPolynomial = None
    roots: tuple = field(default_factory=tuple)
    neutral: np.ndarray = None
    kind = "polyroot"

    def evaluate(self, kvecs):
        kv = _as_kvecs(kvecs, self.dim)
        out = np.empty(len(kv), dtype=np.complex128)
        for i, q in enumerate(kv):
            j = int(np.argmin(np.sum((self.k - q) ** 2, axis=-1)))
            if np.max(np.abs(self.k[j] - q)) <= 1e-12 * max(1.0, float(np.max(np.abs(q)))):
                out[i] = self.values[j]
            else:
                out[i] = _classify(self.poly, q, self.values[j])[0]
        return out

    def status(self, kvecs):
        kv = _as_kvecs(kvecs, self.dim)
        out = np.empty(len(kv), dtype=object)
        for i, q in enumerate(kv):
            j = int(np.argmin(np.sum((self.k - q) ** 2, axis=-1)))
            if np.max(np.abs(self.k[j] - q)) <= 1e-12 * max(1.0, float(np.max(np.abs(q)))):
                out[i] = self.statuses[j]
            else:
                out[i] = _classify(self.poly, q, self.values[j])[1]
        return out

    def residuals(self):
        """``|f(E(k), ik)| / max|coefficient|`` at every tabulated k."""
        out = np.empty(len(self.k))
        for i, q in enumerate(self.k):
            c = self.poly.at(q)
            out[i] = abs(np.polyval(c, self.values[i])) / np.max(np.abs(c))
        return out


def _classify(poly, k, reference):
    c = poly.at(k)
    roots, mults = polynomial_roots(c)
    scale = max(1.0, max(abs(r) for r in roots))
    tol = 1e-12 * scale
    lhp = [(r, d) for r, d in zip(roots, mults) if r.real <= tol]
    count = sum(d for _, d in lhp)
    neutral = any(abs(r.real) <= tol for r, _ in lhp)
    if count == 1:
        return lhp[0][0], UNIQUE, roots, neutral
    if count == 0:
        status = NO_ZERO
    elif len(lhp) == 1:
        status = NONSIMPLE
    else:
        status = MULTIPLE
    pool = [r for r, _ in lhp] or list(roots)
    if reference is None:
        chosen = max(pool, key=lambda r: (r.real, -abs(r.imag)))
    else:
        chosen = min(pool, key=lambda r: abs(r - reference))
    return chosen, status, roots, neutral


def find_dispersion(poly, k_set):
    """Solve ``f(s, ik) = 0`` on every wavevector of ``k_set`` and select ``E(k)``.

    Points are visited in order of increasing ``|k|``; where the selection is
    not unique the tracked root is the one nearest the value at the closest
    already-visited wavevector.
    """
    kv = _as_kvecs(k_set, poly.dim)
    n = len(kv)
    order = np.lexsort((kv[:, 0], np.sum(kv * kv, axis=-1)))
    values = np.empty(n, dtype=np.complex128)
    statuses = np.empty(n, dtype=object)
    neutral = np.zeros(n, dtype=bool)
    roots = [None] * n
    visited = []
    for i in order:
        ref = None
        if visited:
            prev = np.array(visited)
            j = prev[np.argmin(np.sum((kv[prev] - kv[i]) ** 2, axis=-1))]
            ref = values[j]
        values[i], statuses[i], roots[i], neutral[i] = _classify(poly, kv[i], ref)
        visited.append(i)
    return PolyRootDispersion(
        k=kv, values=values, statuses=statuses, dim=poly.dim, poly=poly, roots=tuple(roots), neutral=neutral
    )


def status_summary(dispersion, kvecs):
    return dict(Counter(dispersion.status(kvecs)))


# central-difference stencils, all second-order accurate
_STENCILS = {
    0: {0: 1.0},
    1: {-1: -0.5, 1: 0.5},
    2: {-1: 1.0, 0: -2.0, 1: 1.0},
    3: {-2: -0.5, -1: 1.0, 1: -1.0, 2: 0.5},
    4: {-2: 1.0, -1: -4.0, 0: 6.0, 1: -4.0, 2: 1.0},
}

ZERO = "zero"
FINITE = "finite"
DIVERGENT = "divergent"


@dataclass(frozen=True)
class CumulantRate:
    multi_index: tuple
    value: complex
    flag: str
    raw: tuple = ()

    @property
    def is_finite(self):
        return self.flag != DIVERGENT


def multi_indices(dim, max_order):
    out = []
    for deg in range(1, max_order + 1):
        for alpha in itertools.product(range(deg + 1), repeat=dim):
            if sum(alpha) == deg:
                out.append(tuple(alpha))
    return sorted(out, key=lambda a: (sum(a), tuple(-x for x in a)))


def _fd(dispersion, alpha, h):
    axes = [sorted(_STENCILS[a].items()) for a in alpha]
    points, weights = [], []
    for combo in itertools.product(*axes):
        points.append([off * h for off, _ in combo])
        weights.append(math.prod(w for _, w in combo))
    vals = np.asarray(dispersion.evaluate(np.array(points, dtype=float)), dtype=np.complex128)
    return complex(np.dot(weights, vals)) / h ** sum(alpha)


def cumulant_rates(dispersion, max_order=4, h=1e-2):
    """``[prod_j (i d/dk_j)**alpha_j E](0)`` for ``1 <= |alpha| <= max_order``.

    Central differences at ``h`` and ``h/2`` are Richardson-combined.  A rate is
    flagged divergent when the difference quotient doubles from ``h`` to ``h/2``
    or keeps growing at a steady power-law rate over ``h, h/2, h/4``; it is
    flagged zero when the refined value is below ``1e-8`` of the raw quotient
    scale.
    """
    if not 1 <= max_order <= 4:
        raise ValueError("max_order must be between 1 and 4")
    rates = {}
    for alpha in multi_indices(dispersion.dim, max_order):
        n = sum(alpha)
        d1, d2, d3 = (_fd(dispersion, alpha, h / 2**i) for i in range(3))
        phase = 1j**n
        r1 = abs(d2) / abs(d1) if abs(d1) > 0 else (np.inf if abs(d2) > 0 else 1.0)
        r2 = abs(d3) / abs(d2) if abs(d2) > 0 else (np.inf if abs(d3) > 0 else 1.0)
        floor = 1e-6
        growing = abs(d2) > floor and (r1 >= 2.0 * (1 - 1e-9) or (r1 > 1.1 and r2 > 1.1 and abs(r1 - r2) < 0.05 * r1))
        if growing:
            rates[alpha] = CumulantRate(alpha, complex(np.nan, np.nan), DIVERGENT, (d1, d2, d3))
            continue
        value = phase * (4.0 * d2 - d1) / 3.0
        tol = 1e-8 * max(1.0, abs(d1))
        flag = ZERO if abs(value) <= tol else FINITE
        if flag == ZERO:
            value = 0j
        rates[alpha] = CumulantRate(alpha, complex(value), flag, (d1, d2, d3))
    return rates
