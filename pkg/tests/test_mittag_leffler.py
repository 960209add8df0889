import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erfcx

from conftest import ORACLES
from fracdiff.mittag_leffler import (
    SERIES_RADIUS,
    ml_integral,
    ml_series,
    mittag_leffler,
    region,
)

CASES = [(c["beta"], c["z"], float(c["value"])) for c in ORACLES["mittag_leffler"]]


@pytest.mark.parametrize("beta,z,value", CASES)
def test_against_frozen_oracle(beta, z, value):
    got = mittag_leffler(beta, z)
    assert abs(got - value) <= 1e-10 * max(1.0, abs(value))


def test_order_one_is_exp():
    z = np.linspace(-40, 0, 101)
    assert np.array_equal(mittag_leffler(1.0, z), np.exp(z))


def test_order_half_closed_form():
    # E_{1/2}(-x) = exp(x^2) erfc(x), evaluated without overflow through erfcx
    z = -np.linspace(0, 60, 241)
    exact = erfcx(-z)
    assert np.max(np.abs(mittag_leffler(0.5, z) - exact) / exact) <= 1e-12


def test_order_two_is_cosine_limit():
    # E_2(-x^2) = cos(x); order 1.99 stays close on a short range
    x = np.linspace(0, 2, 21)
    assert np.max(np.abs(mittag_leffler(1.99, -(x**2)) - np.cos(x))) <= 0.05


def test_series_and_integral_agree_on_overlap():
    z = np.linspace(-SERIES_RADIUS, -0.05, 20)
    for beta in (0.3, 0.6, 0.9, 1.4):
        assert np.max(np.abs(ml_series(beta, z) - ml_integral(beta, z))) <= 1e-13


def test_region_labels():
    labels = region(0.5, [-0.5, -5.0, -100.0])
    assert list(labels) == ["series", "integral", "asymptotic"]


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 1.0))
def test_completely_monotone_on_negative_axis(beta):
    z = np.linspace(-50, 0, 400)
    v = mittag_leffler(beta, z)
    assert np.all(v > 0)
    assert np.all(np.diff(v) > 0)
    assert v[-1] == 1.0


def test_scalar_and_array_shapes():
    assert isinstance(mittag_leffler(0.5, -1.0), float)
    assert mittag_leffler(0.5, np.zeros((2, 3)) - 1).shape == (2, 3)


@pytest.mark.parametrize("beta,z", [(0.0, -1.0), (2.0, -1.0), (0.5, 1.0), (0.5, math.nan)])
def test_invalid_arguments(beta, z):
    with pytest.raises(ValueError):
        mittag_leffler(beta, z)
