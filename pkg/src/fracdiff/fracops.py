"""Fractional time derivatives (Caputo, Riemann-Liouville, Weyl) and time translation.

Time-domain operators act on :class:`TimeSignal` samples and always use the
signal's own first node as the lower terminal ``b``.  The Caputo operator uses
the L1 product-integration scheme, the Riemann-Liouville operator uses
Grünwald-Letnikov weights; both are restricted to ``0 < beta < 1``.

The Weyl derivative is translation invariant and is evaluated either on
exponential modes (exact multiplier) or by quadrature of its defining integral
over ``(t, inf)``.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import kernels

_GRID_TOL = 1e-9


@dataclass(frozen=True)
class FracOrder:
    beta: float

    def __post_init__(self):
        b = float(self.beta)
        if not 0.0 < b < 2.0:
            raise ValueError(f"fractional order must lie in (0, 2), got {b}")
        object.__setattr__(self, "beta", b)

    @property
    def int_part(self):
        return math.floor(self.beta)

    @property
    def frac_part(self):
        return self.beta - self.int_part


def _as_order(order):
    return order if isinstance(order, FracOrder) else FracOrder(order)


@dataclass(frozen=True, eq=False)
class TimeSignal:
    """Samples ``psi(t0 + j*dt)``, ``j = 0..n-1``."""

    t0: float
    dt: float
    samples: np.ndarray

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        s = np.array(self.samples, dtype=np.complex128).ravel()
        if s.size < 2:
            raise ValueError("a TimeSignal needs at least two samples")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "dt", float(self.dt))

    @classmethod
    def sample(cls, func, t0, dt, n):
        t = t0 + dt * np.arange(n)
        return cls(t0, dt, np.asarray(func(t), dtype=np.complex128))

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.samples.size)

    def __len__(self):
        return self.samples.size


@dataclass(frozen=True)
class ExpMode:
    amplitude: complex
    rate: complex

    def __post_init__(self):
        if complex(self.rate).real > 0:
            raise ValueError(f"exponential rate must have nonpositive real part, got {self.rate}")


@dataclass(frozen=True)
class ExpSignal:
    """``psi(t) = sum_j a_j exp(s_j t)``, the analytic test signals for the Weyl operator."""

    modes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))

    @classmethod
    def single(cls, rate, amplitude=1.0):
        return cls((ExpMode(amplitude, rate),))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=np.complex128)
        for m in self.modes:
            out = out + m.amplitude * np.exp(m.rate * t)
        return out

    def derivative(self, p):
        """Exact ``p``-th derivative as another :class:`ExpSignal`."""
        return ExpSignal(tuple(ExpMode(m.amplitude * m.rate**p, m.rate) for m in self.modes))

    def translated(self, a):
        """``psi(t - a)``."""
        return ExpSignal(tuple(ExpMode(m.amplitude * np.exp(-m.rate * a), m.rate) for m in self.modes))

    @property
    def decay_rate(self):
        return min(-complex(m.rate).real for m in self.modes)


def _grid_steps(a, dt):
    p = a / dt
    q = round(p)
    if abs(p - q) > _GRID_TOL * max(1.0, abs(p)):
        raise ValueError(f"shift {a} is not a multiple of dt={dt}")
    return int(q)


def translate(sig, a):
    """Time translation ``[T(a) psi](t) = psi(t - a)`` by a grid-aligned ``a``."""
    p = _grid_steps(a, sig.dt)
    return TimeSignal(sig.t0 + p * sig.dt, sig.dt, sig.samples)


def _check_base(sig, base):
    if base is None:
        return
    if abs(base - sig.t0) > _GRID_TOL * max(1.0, abs(sig.t0), sig.dt):
        raise ValueError(f"lower terminal {base} must equal the signal origin {sig.t0}")


def _check_time_order(order):
    order = _as_order(order)
    if not order.beta < 1.0:
        raise ValueError(f"time-domain Caputo/RL operators need 0 < beta < 1, got {order.beta}")
    return order


def l1_weights(beta, n):
    """``b_j = (j+1)**(1-beta) - j**(1-beta)`` for ``j = 0..n-1``."""
    j = np.arange(n, dtype=float)
    return (j + 1.0) ** (1.0 - beta) - j ** (1.0 - beta)


def gl_weights(beta, n):
    """Grünwald-Letnikov weights ``w_0 = 1, w_j = w_{j-1} (1 - (beta+1)/j)``."""
    w = np.empty(n)
    w[0] = 1.0
    for j in range(1, n):
        w[j] = w[j - 1] * (1.0 - (beta + 1.0) / j)
    return w


def caputo_derivative(sig, order, base=None):
    """L1 approximation of the Caputo derivative with lower terminal ``sig.t0``.

    ``D u(t_n) = dt**-beta / Gamma(2-beta) * sum_{j<n} b_j (u_{n-j} - u_{n-j-1})``;
    the value at the first node is defined as 0.
    """
    order = _check_time_order(order)
    _check_base(sig, base)
    beta = order.beta
    u = sig.samples
    n = u.size
    du = np.zeros(n, dtype=np.complex128)
    du[1:] = np.diff(u)
    # conv[n] = sum_{j=0}^{n} b_j du[n-j] and du[0] = 0, so the j = n term drops out
    conv = kernels.causal_convolve(l1_weights(beta, n), du[None, :])[0]
    out = conv * (sig.dt**-beta / math.gamma(2.0 - beta))
    out[0] = 0.0
    return TimeSignal(sig.t0, sig.dt, out)


def rl_derivative(sig, order, base=None):
    """Grünwald-Letnikov approximation of the Riemann-Liouville derivative, first order."""
    order = _check_time_order(order)
    _check_base(sig, base)
    beta = order.beta
    n = sig.samples.size
    conv = kernels.causal_convolve(gl_weights(beta, n), sig.samples[None, :])[0]
    return TimeSignal(sig.t0, sig.dt, conv * sig.dt**-beta)


def weyl_multiplier(rate, order):
    """``exp(-i pi r(beta)) * s**beta`` with the cut on the positive real axis, arg s in (0, 2 pi)."""
    order = _as_order(order)
    s = complex(rate)
    if s.real > 0:
        raise ValueError(f"Weyl eigen-relation needs Re(s) <= 0, got {s}")
    if s == 0:
        if order.frac_part != 0.0:
            raise ValueError("s = 0 is a branch point for non-integer order")
        return 0.0 + 0.0j
    arg = math.atan2(s.imag, s.real) % (2.0 * math.pi)
    mag = abs(s) ** order.beta
    phase = order.beta * arg - math.pi * order.frac_part
    return mag * complex(math.cos(phase), math.sin(phase))


def weyl_derivative_modes(modes, order):
    order = _as_order(order)
    modes = modes.modes if isinstance(modes, ExpSignal) else modes
    return [ExpMode(m.amplitude * weyl_multiplier(m.rate, order), m.rate) for m in modes]


def weyl_horizon(signal, t, tail=1e-12):
    lam = signal.decay_rate
    return float(t) + (math.log(1.0 / tail) + 10.0) / lam


def weyl_derivative_quadrature(signal, order, m=0, times=(0.0,), tail=1e-12):
    """Weyl derivative by quadrature of its integral over ``(t, t + T)``.

    The outer ``d^([beta]+1)/dt^([beta]+1)`` is taken under the integral, so

        D psi(t) = (-1)**(m+1) / Gamma(m+1-r) * int_0^T tau**(m-r) psi^(m+[beta]+1)(tau+t) dtau,

    with ``r`` the fractional part and ``T`` chosen so that the truncated tail
    is below ``tail`` relative to the signal scale.  Returns values at ``times``.
    """
    order = _as_order(order)
    if int(m) != m or m < 0:
        raise ValueError(f"m must be a nonnegative integer, got {m}")
    m = int(m)
    if not isinstance(signal, ExpSignal):
        raise TypeError("weyl_derivative_quadrature needs an ExpSignal")
    if not signal.modes or signal.decay_rate <= 0:
        raise ValueError("Weyl quadrature needs a decaying signal (every Re(s) < 0)")
    r = order.frac_part
    deriv = signal.derivative(m + order.int_part + 1)
    pref = (-1.0) ** (m + 1) / math.gamma(m + 1.0 - r)
    out = []
    for t in np.atleast_1d(np.asarray(times, dtype=float)):
        upper = weyl_horizon(signal, 0.0, tail)
        parts = []
        for take in (np.real, np.imag):
            val, _ = integrate.quad(
                lambda tau: float(take(deriv(tau + t))),
                0.0,
                upper,
                weight="alg",
                wvar=(m - r, 0.0),
                limit=400,
                epsabs=1e-14,
                epsrel=1e-13,
            )
            parts.append(val)
        out.append(pref * complex(parts[0], parts[1]))
    return np.array(out)


@dataclass(frozen=True)
class CommutationResidual:
    residual_norm: float
    shifted_base_norm: float


def commutation_residual(op, psi, a, order, base=0.0, dt=1e-2, n=201, n_weyl=21):
    """Compare ``T_a D_b`` with ``D_b T_a`` and with ``D_{b+a} T_a``.

    ``op`` is ``"caputo"``, ``"rl"`` or ``"weyl"``.  For the time-domain
    operators ``psi`` is a callable sampled as needed on the window
    ``[b, b + (n-1) dt]``; for ``"weyl"`` it is an :class:`ExpSignal`, there is
    no lower terminal and ``shifted_base_norm`` equals ``residual_norm``.
    Norms are max-norms over the common window ``b + a + j*dt``.
    """
    if a < 0:
        raise ValueError("commutation check needs a >= 0")
    p = _grid_steps(a, dt)
    if op == "weyl":
        times = base + a + np.linspace(0.0, (n - 1) * dt, n_weyl)
        lhs = weyl_derivative_quadrature(psi, order, 0, times - a)
        rhs = weyl_derivative_quadrature(psi.translated(a), order, 0, times)
        res = float(np.max(np.abs(lhs - rhs)))
        return CommutationResidual(res, res)
    try:
        derivative = {"caputo": caputo_derivative, "rl": rl_derivative}[op]
    except KeyError:
        raise ValueError(f"unknown operator {op!r}") from None

    shifted = lambda t: psi(t - p * dt)  # noqa: E731
    # T_a D_b psi: derivative from b, relabelled to start at b + a
    lhs = translate(derivative(TimeSignal.sample(psi, base, dt, n), order), p * dt)
    # D_b T_a psi on [b, b + a + T], restricted to the common window
    naive = derivative(TimeSignal.sample(shifted, base, dt, n + p), order).samples[p:]
    # D_{b+a} T_a psi
    moved = derivative(TimeSignal.sample(shifted, base + p * dt, dt, n), order)
    return CommutationResidual(
        float(np.max(np.abs(lhs.samples - naive))),
        float(np.max(np.abs(lhs.samples - moved.samples))),
    )
