"""Moments, cumulants and growth-law fits for densities and evolutions.

Raw moments are normalised quadratures of ``psi * prod_j x_j**a_j``.  Cumulants
come from centred raw moments through the set-partition formula, which is
exact for any order (we stop at 4).  The spectral route (derivatives of the
transform at ``k = 0``) is kept as an independent diagnostic.
"""

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from . import kernels
from .dispersion import multi_indices
from .grid import pad_field, quadrature

MAX_DEGREE = 4
RAW = "raw"
CONNECTED = "connected"
VARIANCE = "variance"


@dataclass(frozen=True)
class MomentSpec:
    multi_index: tuple

    def __post_init__(self):
        a = tuple(int(v) for v in np.atleast_1d(self.multi_index))
        if any(v < 0 for v in a):
            raise ValueError(f"multi-index entries must be >= 0, got {a}")
        if sum(a) > MAX_DEGREE:
            raise ValueError(f"moment degree {sum(a)} exceeds the supported cap {MAX_DEGREE}")
        object.__setattr__(self, "multi_index", a)

    @property
    def degree(self):
        return sum(self.multi_index)

    @property
    def dim(self):
        return len(self.multi_index)


def _spec(spec):
    return spec if isinstance(spec, MomentSpec) else MomentSpec(spec)


def _norm(field):
    n = quadrature(field)
    scale = field.grid.cell_volume * float(np.sum(np.abs(field.values)))
    if scale == 0.0 or abs(n) <= 1e-12 * scale:
        raise ValueError("density has (numerically) zero normalisation; moments are undefined")
    return n


def _weighted(field, alpha, origin):
    w = field.values
    for x, a, c in zip(field.grid.coordinates, alpha, origin):
        if a:
            w = w * (x - c) ** a
    return field.grid.cell_volume * kernels.neumaier_sum(w)


def raw_moment(field, spec, origin=None):
    """``int x**alpha psi / int psi`` about ``origin`` (default 0)."""
    spec = _spec(spec)
    if spec.dim != field.grid.dim:
        raise ValueError("multi-index length must match the grid dimension")
    origin = np.zeros(field.grid.dim) if origin is None else np.broadcast_to(origin, (field.grid.dim,))
    return _weighted(field, spec.multi_index, origin) / _norm(field)


def _dtft(field, kvecs):
    """Riemann-sum transform at arbitrary wavevectors (rows of ``kvecs``)."""
    g = field.grid
    x = np.stack([c.ravel() for c in g.coordinates], axis=0)
    phase = np.exp(-1j * (np.asarray(kvecs) @ x))
    return g.cell_volume * (phase @ field.values.ravel())


def _fd_weights(order, half_width):
    """Central finite-difference weights for ``d^order/dk^order`` on nodes ``-m..m``."""
    nodes = np.arange(-half_width, half_width + 1, dtype=float)
    vander = np.vander(nodes, increasing=True).T
    rhs = np.zeros(nodes.size)
    rhs[order] = math.factorial(order)
    return nodes, np.linalg.solve(vander, rhs)


def spectral_moment(field, spec, step=None, half_width=6):
    """Raw moment from ``prod_j (i d/dk_j)**a_j F psi(0) / F psi(0)`` by wide central stencils.

    The transform is evaluated directly at small off-grid ``k`` (the grid's own
    wavenumbers are far too coarse); ``step`` defaults to a tenth of the
    inverse spread of the density.
    """
    spec = _spec(spec)
    g = field.grid
    if step is None:
        mag = np.abs(field.values)
        r2 = sum(c * c for c in g.coordinates)
        spread = math.sqrt(float(np.sum(r2 * mag) / np.sum(mag)))
        step = 0.1 / max(1.0, spread)
    axes = []
    for a in spec.multi_index:
        if a == 0:
            axes.append((np.zeros(1), np.ones(1)))
        else:
            nodes, w = _fd_weights(a, half_width)
            axes.append((nodes * step, w / step**a))
    ks = np.array(list(product(*[ax[0] for ax in axes])))
    ws = np.array([np.prod(c) for c in product(*[ax[1] for ax in axes])])
    vals = _dtft(field, ks)
    deriv = np.sum(ws * vals)
    f0 = _dtft(field, np.zeros((1, g.dim)))[0]
    return (1j) ** spec.degree * deriv / f0


def _set_partitions(items):
    if not items:
        yield []
        return
    head, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[head] + part[i]] + part[i + 1 :]
        yield [[head]] + part


@dataclass(frozen=True)
class Cumulants:
    values: dict
    mean: tuple

    @property
    def dim(self):
        return len(self.mean)

    def __getitem__(self, alpha):
        return self.values[tuple(alpha)]

    @property
    def variance(self):
        """Trace of the covariance, ``sum_j kappa(2 e_j)``."""
        total = 0j
        for j in range(self.dim):
            a = [0] * self.dim
            a[j] = 2
            total += self.values[tuple(a)]
        return total


def cumulants(field, max_order=4):
    """Cumulants of every multi-index up to ``max_order``.

    Orders >= 2 use moments about (the real part of) the mean, so they are
    insensitive to where the density sits on the grid.  The partition sum keeps
    singleton blocks, which makes it exact about any origin, including the
    complex means of signed perturbative densities.
    """
    if not 1 <= max_order <= MAX_DEGREE:
        raise ValueError(f"max_order must be in 1..{MAX_DEGREE}")
    g = field.grid
    n = _norm(field)
    zero = np.zeros(g.dim)
    mean = []
    for j in range(g.dim):
        a = [0] * g.dim
        a[j] = 1
        mean.append(_weighted(field, a, zero) / n)
    centre = np.array([m.real for m in mean])
    cache = {}

    def central(alpha):
        if alpha not in cache:
            cache[alpha] = _weighted(field, alpha, centre) / n
        return cache[alpha]

    out = {}
    for alpha in multi_indices(g.dim, max_order):
        if sum(alpha) == 1:
            out[alpha] = mean[alpha.index(1)]
            continue
        labels = [j for j, a in enumerate(alpha) for _ in range(a)]
        total = 0j
        for part in _set_partitions(labels):
            nb = len(part)
            term = (-1.0) ** (nb - 1) * math.factorial(nb - 1)
            for block in part:
                b = [0] * g.dim
                for j in block:
                    b[j] += 1
                term = term * central(tuple(b))
            total += term
        out[alpha] = total
    return Cumulants(out, tuple(mean))


@dataclass(frozen=True, eq=False)
class MomentSeries:
    """One tracked quantity over time; ``divergent`` flags times whose value is box-dependent."""

    times: np.ndarray
    values: np.ndarray
    kind: str
    multi_index: tuple = None
    divergent: np.ndarray = None
    domain_checked: bool = False

    def __post_init__(self):
        t = np.array(self.times, dtype=float).ravel()
        v = np.array(self.values, dtype=np.complex128).ravel()
        if t.size != v.size:
            raise ValueError("times and values differ in length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        d = np.zeros(t.size, dtype=bool) if self.divergent is None else np.array(self.divergent, dtype=bool).ravel()
        if d.size != t.size:
            raise ValueError("divergence flags differ in length")
        if np.any(~np.isfinite(v) & ~d):
            raise ValueError("non-finite values must be flagged divergent")
        for a in (t, v, d):
            a.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "divergent", d)
        if self.multi_index is not None:
            object.__setattr__(self, "multi_index", tuple(int(x) for x in self.multi_index))

    def __len__(self):
        return self.times.size

    @property
    def any_divergent(self):
        return bool(np.any(self.divergent))


def _per_snapshot(run, extract):
    return np.array([extract(run.density(i)) for i in range(len(run))], dtype=np.complex128)


def _rerun_doubled(run):
    if run.rerun is None or run.initial is None:
        return None
    big = run.grid.doubled()
    return run.rerun(pad_field(run.initial, big))


def _series(run, extract, kind, multi_index, domain_check, threshold):
    values = _per_snapshot(run, extract)
    flags = ~np.isfinite(values)
    checked = False
    if domain_check:
        big = _rerun_doubled(run)
        if big is not None:
            other = _per_snapshot(big, extract)
            scale = np.maximum(np.abs(values), np.finfo(float).tiny)
            flags |= np.abs(other - values) > threshold * scale
            checked = True
    return MomentSeries(run.times, values, kind, multi_index, flags, checked)


def variance_series(run, domain_check=True, threshold=0.01):
    """Variance of every snapshot; with ``domain_check`` the run is repeated on a box
    twice as long and times where the two disagree by more than ``threshold``
    (relative) are flagged divergent."""
    return _series(run, lambda f: cumulants(f, 2).variance, VARIANCE, None, domain_check, threshold)


def cumulant_series(run, spec, domain_check=False, threshold=0.01):
    spec = _spec(spec)
    alpha = spec.multi_index
    return _series(run, lambda f: cumulants(f, spec.degree)[alpha], CONNECTED, alpha, domain_check, threshold)


def raw_moment_series(run, spec, domain_check=False, threshold=0.01):
    spec = _spec(spec)
    return _series(run, lambda f: raw_moment(f, spec), RAW, spec.multi_index, domain_check, threshold)


@dataclass(frozen=True)
class PowerLawFit:
    amplitude: float
    exponent: float
    r_squared: float
    window: tuple
    n_points: int

    def as_dict(self):
        return {"C": self.amplitude, "alpha": self.exponent, "r2": self.r_squared, "window": list(self.window)}


def _r_squared(y, fit):
    ss_res = float(np.sum((y - fit) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else 0.0
    return min(1.0, max(0.0, 1.0 - ss_res / ss_tot))


def _window(series, window):
    t = series.times
    if window is None:
        window = (t[-1] / 4.0, t[-1])
    lo, hi = float(window[0]), float(window[1])
    if lo > hi:
        raise ValueError(f"empty fit window {window}")
    if lo < t[0] - 1e-12 * max(1.0, abs(t[0])) or hi > t[-1] + 1e-12 * max(1.0, abs(t[-1])):
        raise ValueError(f"fit window {window} is outside the series range [{t[0]}, {t[-1]}]")
    tol = 1e-12 * max(1.0, hi)
    mask = (t >= lo - tol) & (t <= hi + tol)
    return (lo, hi), mask


def fit_power_law(series, var0=0.0, window=None, min_points=8):
    """Least squares of ``ln(Var - var0)`` against ``ln t``: ``Var - var0 ~ C t**alpha``."""
    window, mask = _window(series, window)
    if mask.sum() < min_points:
        raise ValueError(f"fit window holds {int(mask.sum())} points, need at least {min_points}")
    if np.any(series.divergent[mask]):
        raise ValueError("fit window contains values flagged divergent")
    t = series.times[mask]
    excess = series.values[mask].real - var0
    if np.any(t <= 0) or np.any(excess <= 0):
        raise ValueError("power-law fit needs t > 0 and positive excess variance in the window")
    x, y = np.log(t), np.log(excess)
    slope, intercept = np.polyfit(x, y, 1)
    r2 = _r_squared(y, slope * x + intercept)
    return PowerLawFit(float(math.exp(intercept)), float(slope), r2, window, int(mask.sum()))


@dataclass(frozen=True)
class LinearFit:
    slope: complex
    intercept: complex
    r_squared: float


def fit_linear(series, window=None):
    """Straight-line fit of the (complex) values; ``r_squared`` pools real and imaginary parts."""
    if window is None:
        mask = np.ones(len(series), dtype=bool)
    else:
        _, mask = _window(series, window)
    t, v = series.times[mask], series.values[mask]
    if t.size < 2:
        raise ValueError("linear fit needs at least two points")
    a = np.stack([t, np.ones_like(t)], axis=1)
    coef, *_ = np.linalg.lstsq(a, v, rcond=None)
    fit = a @ coef
    y = np.concatenate([v.real, v.imag])
    f = np.concatenate([fit.real, fit.imag])
    ss_res = float(np.sum((y - f) ** 2))
    ss_tot = float(np.sum(np.abs(v - v.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 and ss_res == 0.0 else (0.0 if ss_tot == 0.0 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot)))
    return LinearFit(complex(coef[0]), complex(coef[1]), r2)


@dataclass(frozen=True)
class DegreeReport:
    degree: int
    residual: float
    residual_next: float
    passed: bool


def _poly_residual(t, v, degree):
    s = t / np.max(np.abs(t)) if np.max(np.abs(t)) > 0 else t
    a = np.vander(s, degree + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(a, v, rcond=None)
    return float(np.linalg.norm(a @ coef - v) / max(np.linalg.norm(v), np.finfo(float).tiny))


def polynomial_degree_check(series, spec, tol=1e-4, noise_floor=1e-8):
    """Is the series a polynomial of degree ``deg(alpha)`` in ``t``?

    Passes when the degree-``deg`` least-squares residual is at most ``tol``
    (relative) and one more degree improves it less than tenfold; residuals
    below ``noise_floor`` count as exact, since there a tenfold "improvement"
    only reshuffles round-off.
    """
    degree = _spec(spec).degree if not isinstance(spec, int) else int(spec)
    if len(series) < degree + 3:
        raise ValueError(f"need at least {degree + 3} time points for a degree-{degree} check")
    t, v = series.times, series.values
    r0 = _poly_residual(t, v, degree)
    r1 = _poly_residual(t, v, degree + 1)
    passed = r0 <= tol and (r0 <= noise_floor or r1 > r0 / 10.0)
    return DegreeReport(degree, r0, r1, bool(passed))
