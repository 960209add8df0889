"""Self-check suites behind ``fracdiff verify``.

Each suite returns ``{"suite", "passed", "checks": [...]}`` where every check
records the measured value, the threshold and the comparison.  Everything
is seeded, so reports are reproducible byte for byte.
"""

import math

import numpy as np

from .dispersion import CharPolynomial, ClosedDispersion, WeylDispersion, find_dispersion, weyl_dispersion
from .evolution import (
    caputo_exact_spectral,
    caputo_l1_evolve,
    perturbative_evolve,
    propagator_compose_check,
    spectral_propagate,
)
from .fracops import (
    ExpMode,
    ExpSignal,
    TimeSignal,
    caputo_derivative,
    commutation_residual,
    rl_derivative,
    weyl_derivative_modes,
)
from .grid import DensityField, SpatialGrid, forward_transform, inverse_transform, make_gaussian, quadrature
from .mittag_leffler import mittag_leffler

SUITES = ("commutation", "convergence", "invariants")


def _check(name, value, threshold, op):
    value = float(value)
    ok = {"<=": value <= threshold, ">=": value >= threshold}[op]
    return {"name": name, "value": value, "threshold": float(threshold), "op": op, "passed": bool(ok)}


def _window(name, value, centre, halfwidth):
    value = float(value)
    return {
        "name": name,
        "value": value,
        "threshold": [centre - halfwidth, centre + halfwidth],
        "op": "within",
        "passed": bool(abs(value - centre) <= halfwidth),
    }


def _report(suite, checks):
    return {"suite": suite, "passed": all(c["passed"] for c in checks), "checks": checks}


def commutation_suite(seed=0):
    checks = []
    for beta in (0.5, 0.7, 1.5):
        for a in (0.5, 1.0):
            res = commutation_residual("weyl", ExpSignal.single(-1.0), a, beta, dt=0.05, n=41, n_weyl=9)
            checks.append(_check(f"weyl beta={beta} a={a} residual", res.residual_norm, 1e-8, "<="))
    for op in ("caputo", "rl"):
        res = commutation_residual(op, lambda t: t * t, 1.0, 0.5, dt=1e-2, n=201)
        checks.append(_check(f"{op} t^2 beta=0.5 a=1 shifted-base", res.shifted_base_norm, 1e-6, "<="))
        checks.append(_check(f"{op} t^2 beta=0.5 a=1 naive", res.residual_norm, 0.1, ">="))
        zero = commutation_residual(op, lambda t: t * t, 0.0, 0.5, dt=1e-2, n=101)
        checks.append(_check(f"{op} a=0 residual", max(zero.residual_norm, zero.shifted_base_norm), 0.0, "<="))
    return _report("commutation", checks)


def observed_orders(op, beta, dts, t_end=1.0, power=2):
    """Convergence orders ``log2(e(dt) / e(dt/2))`` of the Caputo (L1) or RL (GL) scheme on ``t**power``."""
    exact = math.gamma(power + 1) / math.gamma(power + 1 - beta)
    deriv = caputo_derivative if op == "caputo" else rl_derivative
    errs = []
    for dt in dts:
        n = int(round(t_end / dt)) + 1
        sig = TimeSignal.sample(lambda t: t**power, 0.0, dt, n)
        d = deriv(sig, beta).samples
        errs.append(abs(d[-1] - exact * t_end ** (power - beta)))
    return [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)], errs


def convergence_suite(seed=0):
    checks = []
    dts = (1 / 40, 1 / 80, 1 / 160)
    for beta in (0.3, 0.5, 0.8):
        orders, _ = observed_orders("caputo", beta, dts)
        checks.append(_window(f"L1 order beta={beta}", orders[-1], 2.0 - beta, 0.2))
        orders, _ = observed_orders("rl", beta, dts)
        checks.append(_window(f"GL order beta={beta}", orders[-1], 1.0, 0.2))
    return _report("convergence", checks)


def _random_field(rng, grid):
    vals = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    return DensityField(grid, vals)


def invariants_suite(seed=0):
    rng = np.random.default_rng(seed)
    checks = []
    grid = SpatialGrid(1, 64, 10.0)
    worst_rt = worst_parseval = 0.0
    mode0_exact = True
    for _ in range(100):
        f = _random_field(rng, grid)
        spec = forward_transform(f)
        back = inverse_transform(spec)
        worst_rt = max(worst_rt, np.max(np.abs(back.values - f.values)) / np.max(np.abs(f.values)))
        lhs = grid.cell_volume * np.sum(np.abs(f.values) ** 2)
        rhs = np.sum(np.abs(spec.modes) ** 2) / grid.length_per_axis**grid.dim
        worst_parseval = max(worst_parseval, abs(lhs - rhs) / lhs)
        mode0_exact &= spec.normalization == quadrature(f)
    checks.append(_check("transform round trip (100 random fields)", worst_rt, 1e-12, "<="))
    checks.append(_check("Parseval relative error", worst_parseval, 1e-10, "<="))
    checks.append(_check("mode(0) == quadrature mismatches", 0 if mode0_exact else 1, 0, "<="))

    const = TimeSignal(0.0, 0.01, np.full(200, 3.7))
    checks.append(_check("Caputo of a constant", np.max(np.abs(caputo_derivative(const, 0.5).samples)), 0.0, "<="))

    worst = 0.0
    for _ in range(20):
        b1, b2 = rng.uniform(0.05, 0.95, size=2)
        s = complex(-rng.uniform(0.1, 3.0), rng.uniform(-3.0, 3.0))
        mode = [ExpMode(1.0, s)]
        twice = weyl_derivative_modes(weyl_derivative_modes(mode, b1), b2)[0].amplitude
        once = weyl_derivative_modes(mode, b1 + b2)[0].amplitude
        # fractional parts adding past 1 pick up exp(-i pi) from the phase convention
        sign = -1.0 if (b1 % 1 + b2 % 1) >= 1.0 else 1.0
        worst = max(worst, abs(twice - sign * once) / abs(once))
    checks.append(_check("Weyl composition (multiplier algebra)", worst, 1e-12, "<="))

    z = np.linspace(-50.0, 0.0, 1000)
    mono = True
    for beta in (0.3, 0.5, 0.7, 0.9, 1.0):
        v = mittag_leffler(beta, z)
        mono &= bool(np.all(v > 0) and np.all(np.diff(v) > 0))
    checks.append(_check("Mittag-Leffler positive and monotone on [-50, 0]", 0 if mono else 1, 0, "<="))

    g = SpatialGrid(1, 256, 40.0)
    psi0 = make_gaussian(g, 0.0, 1.0)
    heat = ClosedDispersion(diffusivity=1.0)
    runs = {
        "spectral": spectral_propagate(psi0, heat, np.linspace(0, 2, 21)),
        "caputo_exact": caputo_exact_spectral(psi0, 0.7, np.linspace(0, 2, 21)),
        "caputo_l1": caputo_l1_evolve(psi0, 0.7, 1e-2, 200, stride=10),
        "perturbative": perturbative_evolve(psi0, 0.05, np.linspace(0, 2, 21), substeps=5).total,
    }
    for name, run in runs.items():
        m0 = run.modes[(slice(None),) + g.zero_index()]
        drift = np.max(np.abs(m0 - m0[0])) / abs(m0[0])
        checks.append(_check(f"normalisation drift ({name})", drift, 1e-12, "<="))

    checks.append(_check("semigroup residual (heat)", propagator_compose_check(psi0, heat, 1.0, 1.0), 1e-12, "<="))
    checks.append(
        _check(
            "semigroup residual (Caputo beta=0.7)",
            propagator_compose_check(psi0, lambda p, t: caputo_exact_spectral(p, 0.7, t), 1.0, 1.0),
            1e-4,
            ">=",
        )
    )

    k = g.axis_wavenumbers
    disp = find_dispersion(CharPolynomial.from_k_polynomials([[1.0], [0.0, 0.0, 1.0]]), k)
    checks.append(_check("polynomial dispersion residual", np.max(disp.residuals()), 1e-10, "<="))
    exact = np.array([weyl_dispersion(1.0, kk) for kk in k])
    checks.append(_check("s + k^2 vs Weyl beta=1", np.max(np.abs(disp.evaluate(k) - exact)), 0.0, "<="))
    w = WeylDispersion(0.5)
    checks.append(_check("even symbol E(-k) = E(k)", np.max(np.abs(w.evaluate(k) - w.evaluate(-k))), 0.0, "<="))
    return _report("invariants", checks)


def run_suite(name, seed=0):
    try:
        fn = {"commutation": commutation_suite, "convergence": convergence_suite, "invariants": invariants_suite}[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; choose from {SUITES}") from None
    return fn(seed)
