import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from fracdiff.fracops import (
    ExpMode,
    ExpSignal,
    FracOrder,
    TimeSignal,
    caputo_derivative,
    commutation_residual,
    gl_weights,
    l1_weights,
    rl_derivative,
    translate,
    weyl_derivative_modes,
    weyl_derivative_quadrature,
    weyl_multiplier,
)
from fracdiff.verify import observed_orders


def test_order_parts():
    o = FracOrder(1.3)
    assert o.int_part == 1 and o.frac_part == pytest.approx(0.3)
    assert FracOrder(0.5).int_part == 0
    for bad in (0.0, 2.0, -0.1):
        with pytest.raises(ValueError):
            FracOrder(bad)


def test_translate():
    sig = TimeSignal.sample(lambda t: t, 0.0, 0.1, 11)
    same = translate(sig, 0.0)
    assert same.t0 == sig.t0 and np.array_equal(same.samples, sig.samples)
    a = translate(translate(sig, 0.3), 0.2)
    b = translate(sig, 0.5)
    assert a.t0 == pytest.approx(b.t0) and np.array_equal(a.samples, b.samples)
    # the shifted signal takes the value psi(t - a) at its own nodes
    assert np.allclose(b.samples, b.times - 0.5)
    with pytest.raises(ValueError):
        translate(sig, 0.05)


def test_weights():
    assert np.allclose(l1_weights(0.5, 3), [1.0, math.sqrt(2) - 1, math.sqrt(3) - math.sqrt(2)])
    w = gl_weights(0.5, 4)
    assert np.allclose(w, [1.0, -0.5, -0.125, -0.0625])


def test_caputo_constant_is_exactly_zero():
    sig = TimeSignal(0.0, 0.01, np.full(300, -2.5 + 1j))
    for beta in (0.1, 0.5, 0.9):
        assert np.all(caputo_derivative(sig, beta).samples == 0)


def test_caputo_of_t_matches_closed_form():
    dt = 1e-2
    sig = TimeSignal.sample(lambda t: t, 0.0, dt, 201)
    d = caputo_derivative(sig, 0.5).samples
    t = sig.times
    exact = 2.0 * np.sqrt(t / math.pi)
    # oracle for the closed form: the defining integral done by adaptive quadrature
    oracle, _ = integrate.quad(lambda tau: 1.0, 0.0, 2.0, weight="alg", wvar=(0.0, -0.5))
    assert exact[-1] == pytest.approx(oracle / math.gamma(0.5), rel=1e-12)
    assert d[0] == 0
    assert np.max(np.abs(d[1:] - exact[1:]) / exact[1:]) <= 2 * dt**1.5


def test_caputo_near_one_is_first_derivative():
    dt = 1e-3
    sig = TimeSignal.sample(np.sin, 0.0, dt, 2001)
    d = caputo_derivative(sig, 0.999).samples
    t = sig.times
    assert np.max(np.abs(d[10:] - np.cos(t[10:]))) <= 10 * (dt + 1e-3)


def test_rl_of_one():
    dt = 1e-3
    sig = TimeSignal(0.0, dt, np.ones(1001))
    d = rl_derivative(sig, 0.5).samples
    t = sig.times
    far = t >= 5 * dt
    exact = t[far] ** -0.5 / math.gamma(0.5)
    assert np.max(np.abs(d[far] - exact) / exact) <= 0.05


def test_rl_equals_caputo_plus_boundary_term():
    dt = 1e-3
    sig = TimeSignal.sample(lambda t: 1.0 + t, 0.0, dt, 1001)
    rl = rl_derivative(sig, 0.5).samples
    cap = caputo_derivative(sig, 0.5).samples
    t = sig.times
    far = t >= 0.1
    boundary = t[far] ** -0.5 / math.gamma(0.5)
    assert np.max(np.abs(rl[far] - (cap[far] + boundary))) <= 5 * dt**0.5 * 1e-1


def test_rl_near_one_is_first_derivative():
    dt = 1e-3
    sig = TimeSignal.sample(lambda t: np.exp(-t) * t**2, 0.0, dt, 2001)
    d = rl_derivative(sig, 0.999).samples
    t = sig.times
    exact = np.exp(-t) * (2 * t - t**2)
    assert np.max(np.abs(d[10:] - exact[10:])) <= 10 * (dt + 1e-3)


def test_time_operators_reject_bad_input():
    sig = TimeSignal.sample(lambda t: t, 0.0, 0.1, 10)
    with pytest.raises(ValueError):
        caputo_derivative(sig, 1.5)
    with pytest.raises(ValueError):
        rl_derivative(sig, 0.5, base=0.3)
    with pytest.raises(ValueError):
        TimeSignal(0.0, 0.1, [1.0])
    with pytest.raises(ValueError):
        TimeSignal(0.0, 0.0, [1.0, 2.0])


def test_weyl_multiplier_examples():
    assert weyl_multiplier(-1.0, 0.5) == pytest.approx(1.0, abs=1e-15)
    assert weyl_multiplier(-2.0, 0.5) == pytest.approx(math.sqrt(2), abs=1e-15)
    for s in (-1.0, -0.3 + 2j, -4 - 1j):
        assert weyl_multiplier(s, 1.0) == pytest.approx(s, abs=1e-14)
    # cut on the positive real axis: arg(s) in (0, 2 pi)
    s = -1 - 1j
    arg = cmath.phase(s) % (2 * math.pi)
    assert arg > math.pi
    expect = abs(s) ** 0.5 * cmath.exp(1j * (0.5 * arg - 0.5 * math.pi))
    assert weyl_multiplier(s, 0.5) == pytest.approx(expect, abs=1e-15)
    with pytest.raises(ValueError):
        weyl_multiplier(0.5, 0.5)
    with pytest.raises(ValueError):
        weyl_multiplier(0.0, 0.5)
    with pytest.raises(ValueError):
        ExpMode(1.0, 0.1)


def test_weyl_quadrature_m_independence_and_modes():
    sig = ExpSignal.single(-1.0)
    times = [0.0, 0.5, 2.0]
    q0 = weyl_derivative_quadrature(sig, 0.5, 0, times)
    q1 = weyl_derivative_quadrature(sig, 0.5, 1, times)
    assert np.max(np.abs(q0 - q1)) <= 1e-8
    assert np.max(np.abs(q0 - np.exp(-np.array(times)))) <= 1e-6 * np.max(np.exp(-np.array(times)))


def test_weyl_quadrature_order_above_one():
    sig = ExpSignal.single(-2.0)
    t = np.array([0.0, 0.7])
    q = weyl_derivative_quadrature(sig, 1.5, 0, t)
    mult = weyl_multiplier(-2.0, 1.5)
    assert mult == pytest.approx(-(2**1.5), abs=1e-12)
    assert np.max(np.abs(q - mult * np.exp(-2 * t))) <= 1e-6 * 2**1.5


@pytest.mark.parametrize("s", [-0.5 + 1.5j, -1.0 - 0.25j])
@pytest.mark.parametrize("beta", [0.3, 1.4])
def test_weyl_quadrature_complex_rates(s, beta):
    sig = ExpSignal((ExpMode(0.5 - 1j, s),))
    t = np.array([0.0, 1.0])
    q = weyl_derivative_quadrature(sig, beta, 0, t)
    exact = weyl_derivative_modes(sig, beta)[0].amplitude * np.exp(s * t)
    assert np.max(np.abs(q - exact)) <= 1e-6 * np.max(np.abs(exact))


def test_weyl_quadrature_rejects_non_decaying():
    with pytest.raises(ValueError):
        weyl_derivative_quadrature(ExpSignal.single(1j), 0.5)


def test_commutation_examples():
    res = commutation_residual("caputo", lambda t: t * t, 1.0, 0.5)
    assert res.shifted_base_norm <= 1e-6
    assert res.residual_norm > 0.1
    res = commutation_residual("rl", lambda t: t * t, 1.0, 0.5)
    assert res.shifted_base_norm <= 1e-6
    assert res.residual_norm > 0.1
    for op in ("caputo", "rl"):
        zero = commutation_residual(op, lambda t: t * t, 0.0, 0.5)
        assert zero.residual_norm == 0 and zero.shifted_base_norm == 0
    w = commutation_residual("weyl", ExpSignal.single(-1.0), 0.7, 0.5, dt=0.1, n=21, n_weyl=6)
    assert w.residual_norm <= 1e-8


@pytest.mark.parametrize("beta", [0.3, 0.5, 0.8])
@pytest.mark.parametrize("steps", [1, 10])
def test_base_shift_identity_random_polynomials(beta, steps):
    r = np.random.default_rng(int(beta * 10) + steps)
    dt = 1e-2
    for _ in range(10):
        coef = r.standard_normal(r.integers(1, 5))
        res = commutation_residual("caputo", lambda t: np.polyval(coef, t), steps * dt, beta, dt=dt, n=101)
        assert res.shifted_base_norm <= 1e-6 * max(1.0, np.max(np.abs(coef)))
        res = commutation_residual("rl", lambda t: np.polyval(coef, t), steps * dt, beta, dt=dt, n=101)
        assert res.shifted_base_norm <= 1e-6 * max(1.0, np.max(np.abs(coef)))


@pytest.mark.parametrize("beta", [0.3, 0.5, 0.8])
def test_convergence_orders(beta):
    orders, _ = observed_orders("caputo", beta, (1 / 40, 1 / 80, 1 / 160))
    assert abs(orders[-1] - (2 - beta)) <= 0.2
    orders, _ = observed_orders("rl", beta, (1 / 40, 1 / 80, 1 / 160))
    assert abs(orders[-1] - 1.0) <= 0.2


rates = st.builds(complex, st.floats(-5, -0.01), st.floats(-5, 5))
orders = st.floats(0.01, 0.99)


@settings(max_examples=200, deadline=None)
@given(rates, orders, orders)
def test_weyl_composition(s, b1, b2):
    twice = weyl_multiplier(s, b1) * weyl_multiplier(s, b2)
    once = weyl_multiplier(s, b1 + b2)
    # the phase factor exp(-i pi r) is additive only while r1 + r2 stays below 1
    sign = 1.0 if b1 + b2 < 1.0 else -1.0
    assert abs(twice - sign * once) <= 1e-12 * abs(once)


def test_weyl_composition_sign_flip_is_real():
    # half derivative applied twice is minus the first derivative in this convention
    s = -1.3 + 0.4j
    assert weyl_multiplier(s, 0.5) ** 2 == pytest.approx(-weyl_multiplier(s, 1.0), abs=1e-14)
