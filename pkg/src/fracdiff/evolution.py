"""Time evolution of densities on a periodic grid.

Three families of solvers, all acting mode by mode on the spectrum:

* :func:`spectral_propagate` multiplies each mode by ``exp(t E(k))`` for a
  translation-invariant dispersion relation.
* :func:`caputo_exact_spectral` and :func:`caputo_l1_evolve` solve
  ``D_C^beta psi = laplacian psi`` (Caputo derivative from ``t = 0``), the
  first through the Mittag-Leffler function, the second by implicit L1 steps.
* :func:`perturbative_evolve` expands the Caputo equation at ``beta = 1 - eps``
  to first order in ``eps``: the heat solution plus two corrections obtained
  by integrating the heat Green's function against logarithmic sources.

Work is done once per distinct ``|k|**2`` (the Caputo and heat problems only
see that) and scattered back to the grid.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dispersion import UNIQUE, ClosedDispersion, DispersionRelation
from .errors import NumericalError
from .fracops import FracOrder, l1_weights
from .grid import DensityField, SpectralField, forward_transform, inverse_transform
from .mittag_leffler import mittag_leffler

EULER_GAMMA = 0.5772156649015329
MAX_EPSILON = 0.2

SPECTRAL = "spectral"
CAPUTO_EXACT = "caputo_exact"
CAPUTO_L1 = "caputo_l1"
PERTURBATIVE = "perturbative"

_HEAT = ClosedDispersion(diffusivity=1.0)


@dataclass(frozen=True, eq=False)
class EvolutionResult:
    """Spectra at a sequence of times.

    ``modes`` has shape ``(len(times),) + grid.shape``.  ``rerun`` (optional)
    repeats the same computation from another initial density, which is how
    moment diagnostics re-solve on an enlarged box.
    """

    grid: object
    times: np.ndarray
    modes: np.ndarray
    provenance: str
    params: dict = field(default_factory=dict)
    initial: DensityField = None
    rerun: object = None

    def __post_init__(self):
        t = np.array(self.times, dtype=float).ravel()
        m = np.array(self.modes, dtype=np.complex128)
        if m.shape != (t.size,) + self.grid.shape:
            raise ValueError(f"modes shape {m.shape} does not match {t.size} times on grid {self.grid.shape}")
        t.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "modes", m)

    def __len__(self):
        return self.times.size

    def snapshot(self, i):
        return SpectralField(self.grid, self.modes[i])

    @property
    def snapshots(self):
        return [self.snapshot(i) for i in range(len(self))]

    def density(self, i):
        return inverse_transform(self.snapshot(i))


def _initial(psi0):
    """``(density, spectrum)`` for a DensityField or SpectralField input."""
    if isinstance(psi0, SpectralField):
        return inverse_transform(psi0), psi0
    if isinstance(psi0, DensityField):
        return psi0, forward_transform(psi0)
    raise TypeError("initial condition must be a DensityField or SpectralField")


def _times(times, allow_empty=False):
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if t.ndim != 1 or (t.size == 0 and not allow_empty):
        raise ValueError("times must be a nonempty 1-D sequence")
    if np.any(~np.isfinite(t)) or np.any(t < 0):
        raise ValueError("times must be finite and >= 0")
    return t


def _uniform_from_zero(t):
    if t.size < 2 or t[0] != 0.0:
        raise ValueError("this solver needs a uniform time grid starting at t = 0")
    dt = (t[-1] - t[0]) / (t.size - 1)
    if not np.allclose(np.diff(t), dt, rtol=1e-9, atol=0.0):
        raise ValueError("time grid must be uniform")
    return dt


def _unique_k2(grid):
    lam, inv = np.unique(grid.k_squared.ravel(), return_inverse=True)
    return lam, inv.reshape(grid.shape)


# ---------------------------------------------------------------- spectral


def spectral_propagate(psi0, dispersion, times, allow_nonunique=False, growth_tol=1e-12):
    """``F psi(t, k) = F psi(0, k) * exp(t E(k))`` at every requested time."""
    if not isinstance(dispersion, DispersionRelation):
        raise TypeError("dispersion must be a DispersionRelation")
    density, spec = _initial(psi0)
    grid = spec.grid
    t = _times(times)
    energy = dispersion.on_grid(grid)
    bad = energy.real > growth_tol * np.maximum(1.0, np.abs(energy))
    if np.any(bad):
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise ValueError(f"dispersion has Re E > 0 at mode {idx} (E = {energy[idx]}); evolution would grow without bound")
    if not allow_nonunique:
        status = dispersion.status_on_grid(grid)
        off = status != UNIQUE
        if np.any(off):
            idx = tuple(int(i) for i in np.argwhere(off)[0])
            raise ValueError(f"dispersion status is {status[idx]!r} at mode {idx}; pass allow_nonunique=True to override")
    tt = t.reshape((-1,) + (1,) * grid.dim)
    modes = spec.modes[None] * np.exp(tt * energy[None])
    # t = 0 is the initial spectrum itself
    modes[t == 0.0] = spec.modes

    def rerun(p):
        return spectral_propagate(p, dispersion, t, allow_nonunique, growth_tol)

    return EvolutionResult(grid, t, modes, SPECTRAL, {"dispersion": type(dispersion).__name__}, density, rerun)


def propagator_compose_check(psi0, evolver, t1, t2):
    """Max-norm of ``P(t1 + t2) psi0 - P(t2) P(t1) psi0`` over the spectrum.

    ``evolver`` is a :class:`DispersionRelation` (spectral propagation) or a
    callable ``evolver(initial, times) -> EvolutionResult`` such as
    ``lambda p, t: caputo_exact_spectral(p, 0.7, t)``.  The restart feeds the
    spectrum at ``t1`` in as a fresh initial condition.
    """
    if isinstance(evolver, DispersionRelation):
        dispersion = evolver

        def evolver(p, t):
            return spectral_propagate(p, dispersion, t)

    _, spec = _initial(psi0)
    direct = evolver(spec, [t1 + t2]).modes[0]
    mid = evolver(spec, [t1]).snapshot(0)
    restarted = evolver(mid, [t2]).modes[0]
    return float(np.max(np.abs(direct - restarted)))


# ---------------------------------------------------------------- Caputo


def _caputo_order(beta):
    order = FracOrder(beta)
    if order.beta > 1.0:
        raise ValueError(f"Caputo diffusion solvers need 0 < beta <= 1, got {order.beta}")
    return order.beta


def caputo_exact_spectral(psi0, beta, times):
    """``F psi(t, k) = F psi(0, k) * E_beta(-|k|**2 t**beta)``."""
    beta = _caputo_order(beta)
    density, spec = _initial(psi0)
    grid = spec.grid
    t = _times(times)
    lam, inv = _unique_k2(grid)
    z = -(lam[None, :] * t[:, None] ** beta)
    try:
        factor = mittag_leffler(beta, z.ravel()).reshape(z.shape)
    except ValueError as exc:
        raise NumericalError("mittag_leffler", str(exc)) from exc
    if not np.all(np.isfinite(factor)):
        raise NumericalError("mittag_leffler", "non-finite value")
    modes = spec.modes[None] * factor[:, inv]
    modes[t == 0.0] = spec.modes

    def rerun(p):
        return caputo_exact_spectral(p, beta, t)

    return EvolutionResult(grid, t, modes, CAPUTO_EXACT, {"beta": beta}, density, rerun)


def caputo_l1_evolve(psi0, beta, dt, n_steps, stride=1):
    """Implicit L1 time stepping of the Caputo diffusion equation, per distinct ``|k|**2``.

    Each step solves ``c [u_n - u_{n-1} + sum_{j=1}^{n-1} b_j (u_{n-j} - u_{n-j-1})] = -|k|**2 u_n``
    with ``c = dt**-beta / Gamma(2 - beta)``; the full history enters every step.
    Snapshots are kept every ``stride`` steps (step 0 included).
    """
    beta = _caputo_order(beta)
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    n_steps = int(n_steps)
    stride = int(stride)
    if n_steps < 1 or stride < 1:
        raise ValueError("n_steps and stride must be positive")
    density, spec = _initial(psi0)
    grid = spec.grid
    lam, inv = _unique_k2(grid)
    c = dt**-beta / math.gamma(2.0 - beta)
    u = kernels.l1_relaxation(lam, l1_weights(beta, n_steps + 1), c, n_steps)
    if not np.all(np.isfinite(u)):
        raise NumericalError("evolution.caputo_l1", "non-finite amplitude")
    keep = np.arange(0, n_steps + 1, stride)
    t = keep * dt
    modes = spec.modes[None] * u[:, keep].T[:, inv]

    def rerun(p):
        return caputo_l1_evolve(p, beta, dt, n_steps, stride)

    return EvolutionResult(grid, t, modes, CAPUTO_L1, {"beta": beta, "dt": dt, "n_steps": n_steps}, density, rerun)


# ---------------------------------------------------------------- perturbative


def greens_function(t, k, dim=1):
    """Retarded heat Green's function ``-theta(t) exp(-|k|**2 t)`` with ``theta(0) = 1``.

    For ``dim > 1`` the last axis of ``k`` holds the components.
    """
    t = np.asarray(t, dtype=float)
    k = np.asarray(k, dtype=float)
    k2 = k * k if dim == 1 else np.sum(k * k, axis=-1)
    with np.errstate(over="ignore"):
        val = -np.exp(-k2 * t)
    return np.where(t >= 0, val, 0.0)


def _log_weight_tables(n):
    """``A_m = int_0^1 ln(m+y)(1-y) dy`` and ``B_m = int_0^1 ln(m+y) y dy`` for ``m < n``."""
    m = np.arange(n, dtype=float)
    c = np.empty(n)
    b = np.empty(n)
    c[0], b[0] = -1.0, -0.25
    mm = m[1:]
    c[1:] = np.log1p(mm) + mm * np.log1p(1.0 / mm) - 1.0
    # B_m = ln(m)/2 + int_0^1 y log1p(y/m) dy; the remainder by series once m >= 8
    small = mm < 8
    ms = mm[small]
    rem = np.empty(mm.size)
    rem[small] = 0.5 * (1.0 - ms**2) * np.log1p(1.0 / ms) - 0.25 + 0.5 * ms
    ml = mm[~small]
    p = np.arange(1, 24, dtype=float)
    rem[~small] = (((-1.0) ** (p + 1) / (p * (p + 2)))[None, :] * ml[:, None] ** -p[None, :]).sum(axis=1)
    b[1:] = 0.5 * np.log(mm) + rem
    return c - b, b


def log_convolution(g, dt):
    """``I_n = int_0^{t_n} ln(t_n - s) g(s) ds`` for piecewise-linear ``g``, rows independent.

    ``g`` has shape ``(modes, n_times)`` on ``t_n = n dt``; the logarithm is
    integrated exactly on every panel, including the singular last one.
    """
    g = np.ascontiguousarray(g, dtype=np.complex128)
    n = g.shape[1]
    a, b = _log_weight_tables(n)
    half = 0.5 * math.log(dt)
    p = half + a
    q = half + b
    pg = kernels.causal_convolve(p, g)
    qg = kernels.causal_convolve(q, g)
    out = np.zeros_like(g)
    out[:, 1:] = dt * (pg[:, 1:] - p[1:][None, :] * g[:, :1] + qg[:, :-1])
    return out


def _exp_weights(lam, dt):
    x = lam * dt
    a0 = np.empty_like(lam)
    a1 = np.empty_like(lam)
    small = x < 0.5
    xs = x[small]
    # series in x for both moments of exp(-lam s) over one step
    j = np.arange(20, dtype=float)
    fact = np.array([math.factorial(int(v)) for v in j], dtype=float)
    powers = (-xs[:, None]) ** j[None, :] / fact[None, :]
    a0[small] = dt * (powers / (j + 1.0)).sum(axis=1)
    a1[small] = dt * dt * (powers / (j + 2.0)).sum(axis=1)
    xl, ll = x[~small], lam[~small]
    a0[~small] = -np.expm1(-xl) / ll
    a1[~small] = (-np.expm1(-xl) - xl * np.exp(-xl)) / ll**2
    w_prev = a1 / dt
    w_cur = a0 - a1 / dt
    return np.exp(-x), w_prev, w_cur


def exp_convolution(lam, f, dt):
    """``I_n = int_0^{t_n} exp(-lam (t_n - s)) f(s) ds`` for piecewise-linear ``f`` per row."""
    lam = np.asarray(lam, dtype=float)
    decay, w_prev, w_cur = _exp_weights(lam, dt)
    return kernels.exp_convolve(decay, w_prev, w_cur, f)


@dataclass(frozen=True, eq=False)
class Sources:
    """First- and second-order source terms on the nodes ``t_n = n dt``, ``n >= 1``."""

    times: np.ndarray
    first: np.ndarray
    second: np.ndarray


def _check_epsilon(epsilon, limit):
    epsilon = float(epsilon)
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    if epsilon > limit:
        raise ValueError(f"epsilon = {epsilon} exceeds the first-order validity guard {limit}")
    return epsilon


def _source_terms(lam, heat, dt, epsilon):
    """Sources on every node for rows ``heat`` (``F psi^H`` per mode) with ``|k|**2 = lam``."""
    lam = lam[:, None]
    logc = log_convolution(heat, dt)
    t = dt * np.arange(heat.shape[1])
    lnt = np.full(t.shape, np.nan)
    lnt[1:] = np.log(t[1:])
    first = epsilon * EULER_GAMMA * (-lam) * heat
    second = epsilon * (-lam * heat[:, :1] * lnt[None, :] + lam**2 * logc)
    return first, second, logc


def perturbative_sources(psi_h, epsilon, limit=MAX_EPSILON):
    """Sources of the first-order expansion, built from a heat evolution.

    ``J1 = eps gamma D F psi^H`` and
    ``J2 = eps [(D F psi^H)(0) ln t + int_0^t ln(t - s) (D^2 F psi^H)(s) ds]``
    with ``D F psi^H = -|k|**2 F psi^H`` taken analytically.  ``psi_h`` must be a
    spectral heat run on a uniform grid from ``t = 0``; the returned values
    start at the first positive node.
    """
    epsilon = _check_epsilon(epsilon, limit)
    if psi_h.provenance != SPECTRAL:
        raise ValueError("sources are defined from a spectral heat evolution")
    dt = _uniform_from_zero(psi_h.times)
    grid = psi_h.grid
    rows = np.moveaxis(psi_h.modes, 0, -1).reshape(grid.size, -1)
    lam = grid.k_squared.ravel()
    first, second, _ = _source_terms(lam, rows, dt, epsilon)
    shape = grid.shape + (-1,)
    return Sources(
        psi_h.times[1:],
        np.moveaxis(first[:, 1:].reshape(shape), -1, 0),
        np.moveaxis(second[:, 1:].reshape(shape), -1, 0),
    )


@dataclass(frozen=True, eq=False)
class PerturbativeRun:
    """``F psi = F psi^H + F psi_1 + F psi_2`` on the output times."""

    epsilon: float
    times: np.ndarray
    homogeneous: EvolutionResult
    first: np.ndarray
    second: np.ndarray
    euler_gamma: float = EULER_GAMMA

    @property
    def grid(self):
        return self.homogeneous.grid

    @property
    def total(self):
        h = self.homogeneous
        modes = h.modes + self.first + self.second
        eps = self.epsilon

        def rerun(p):
            return perturbative_evolve(p, eps, h.times).total

        return EvolutionResult(h.grid, h.times, modes, PERTURBATIVE, {"epsilon": eps}, h.initial, rerun)


def perturbative_evolve(psi0, epsilon, times, substeps=1, limit=MAX_EPSILON):
    """First-order expansion of Caputo diffusion at ``beta = 1 - epsilon``.

    ``F psi_i(t) = int_0^t G(t - s) J_i(s) ds`` with the heat Green's function
    ``G``.  The ``ln s`` part of ``J2`` is integrated in closed form through
    ``int_0^t exp(-lam (t - s)) ln s ds = int_0^t ln(t - s) exp(-lam s) ds``;
    everything else uses exact exponential product integration on a grid
    ``substeps`` times finer than ``times``, which must be uniform from 0.
    """
    epsilon = _check_epsilon(epsilon, limit)
    t_out = _times(times)
    dt_out = _uniform_from_zero(t_out)
    substeps = int(substeps)
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    homogeneous = spectral_propagate(psi0, _HEAT, t_out)
    grid = homogeneous.grid
    zero = np.zeros_like(homogeneous.modes)
    if epsilon == 0.0:
        return PerturbativeRun(0.0, t_out, homogeneous, zero, zero.copy())

    dt = dt_out / substeps
    n_fine = (t_out.size - 1) * substeps + 1
    lam, inv = _unique_k2(grid)
    # unit-amplitude heat rows; the initial spectrum multiplies at the end
    tf = dt * np.arange(n_fine)
    unit = np.exp(-lam[:, None] * tf[None, :]).astype(np.complex128)
    first_src, _, logc = _source_terms(lam, unit, dt, epsilon)
    psi1 = -exp_convolution(lam, first_src, dt)
    # J2 = eps (-lam ln t + lam**2 L(t)) with L = logc for unit amplitude
    psi2 = -epsilon * (-lam[:, None] * logc + lam[:, None] ** 2 * exp_convolution(lam, logc, dt))
    for name, arr in (("first", psi1), ("second", psi2)):
        if not np.all(np.isfinite(arr)):
            raise NumericalError("evolution.perturbative", f"non-finite {name}-order correction")
    pick = np.arange(0, n_fine, substeps)
    c0 = homogeneous.modes[0]
    first = c0[None] * psi1[:, pick].T[:, inv]
    second = c0[None] * psi2[:, pick].T[:, inv]
    return PerturbativeRun(epsilon, t_out, homogeneous, first, second)


# ---------------------------------------------------------------- variance laws


def exact_variance(t, dim, beta, var0=0.0):
    """``Var(0) + 2 d t**beta / Gamma(1 + beta)``."""
    t = np.asarray(t, dtype=float)
    return var0 + 2.0 * dim * t**beta / math.gamma(1.0 + beta)


def perturbative_variance(t, dim, epsilon, var0=0.0):
    """First-order expansion of :func:`exact_variance` at ``beta = 1 - epsilon``:
    ``Var(0) + 2 d t - 2 d eps (gamma t + t ln t - t)`` (``t > 0``; the ``t -> 0`` limit is ``var0``).
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        tlnt = np.where(t > 0, t * np.log(np.where(t > 0, t, 1.0)), 0.0)
    return var0 + 2.0 * dim * t - 2.0 * dim * epsilon * (EULER_GAMMA * t + tlnt - t)
