import json

import numpy as np
import pytest

from fracdiff import io
from fracdiff.dispersion import CharPolynomial, find_dispersion
from fracdiff.evolution import caputo_exact_spectral
from fracdiff.fracops import TimeSignal
from fracdiff.grid import DensityField, SpatialGrid, forward_transform
from fracdiff.moments import MomentSeries, PowerLawFit


def _random_field(rng, grid):
    return DensityField(grid, rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))


@pytest.mark.parametrize("dim,n", [(1, 32), (2, 8)])
def test_field_round_trip(tmp_path, rng, dim, n):
    g = SpatialGrid(dim, n, 7.5)
    f = _random_field(rng, g)
    io.write_field(tmp_path / "f", f, time=0.25)
    back, t = io.read_field(tmp_path / "f")
    assert back.grid == g and t == 0.25
    assert np.array_equal(back.values, f.values)


def test_spectrum_round_trip(tmp_path, rng):
    g = SpatialGrid(2, 8, 3.0)
    s = forward_transform(_random_field(rng, g))
    io.write_spectrum(tmp_path / "s", s, 1.5)
    back, t = io.read_spectrum(tmp_path / "s")
    assert np.array_equal(back.modes, s.modes) and t == 1.5
    assert json.loads((tmp_path / "s.json").read_text())["domain"] == "spectral"


def test_time_signal_round_trip(tmp_path, rng):
    sig = TimeSignal(0.0, 0.125, rng.standard_normal(9) + 1j * rng.standard_normal(9))
    io.write_time_signal(tmp_path / "sig.csv", sig)
    back = io.read_time_signal(tmp_path / "sig.csv")
    assert np.array_equal(back.samples, sig.samples)
    assert back.dt == sig.dt


def test_dispersion_table_round_trip(tmp_path):
    k = np.linspace(-2, 2, 9)
    d = find_dispersion(CharPolynomial.from_k_polynomials([[1.0], [0.0, 0.0, 1.0]]), k)
    io.write_dispersion(tmp_path / "d.csv", d, k)
    header = (tmp_path / "d.csv").read_text().splitlines()[0]
    assert header == "k,re_E,im_E,status"
    back = io.read_dispersion(tmp_path / "d.csv")
    assert np.array_equal(back.evaluate(k), d.evaluate(k))
    assert list(back.status(k)) == list(d.status(k))


def test_evolution_round_trip(tmp_path, gauss512):
    run = caputo_exact_spectral(gauss512, 0.6, [0.0, 0.5, 1.0])
    io.write_evolution(tmp_path / "ev", run)
    back = io.read_evolution(tmp_path / "ev")
    assert np.array_equal(back.modes, run.modes)
    assert np.array_equal(back.times, run.times)
    assert back.provenance == run.provenance and back.params == run.params


@pytest.mark.parametrize("suffix", [".csv", ".json"])
def test_series_round_trip(tmp_path, rng, suffix):
    t = np.cumsum(rng.uniform(0.1, 1, 12))
    s = MomentSeries(t, rng.standard_normal(12) + 1j * rng.standard_normal(12), "variance", divergent=t > t[8])
    path = tmp_path / f"s{suffix}"
    if suffix == ".csv":
        io.write_series(path, s)
    else:
        io.dump_json(io.series_dict(s), path)
    back = io.read_series(path)
    assert np.array_equal(back.times, s.times)
    assert np.array_equal(back.values, s.values)
    assert np.array_equal(back.divergent, s.divergent)


def test_series_header_checked(tmp_path):
    (tmp_path / "bad.csv").write_text("t,v\n0,1\n")
    with pytest.raises(ValueError, match="expected columns"):
        io.read_series(tmp_path / "bad.csv")


def test_fit_round_trip(tmp_path):
    fit = PowerLawFit(2.0000000000000004, 0.7000000000000001, 0.99999, (2.5, 10.0), 76)
    io.write_fit(tmp_path / "fit.json", fit)
    back = io.read_fit(tmp_path / "fit.json")
    assert (back.amplitude, back.exponent, back.r_squared, back.window) == (
        fit.amplitude,
        fit.exponent,
        fit.r_squared,
        fit.window,
    )


def test_json_is_deterministic():
    obj = {"b": np.float64(0.1), "a": [np.int64(3), 1 + 2j, np.inf], "c": np.array([True, False])}
    text = io.dump_json(obj)
    assert text == io.dump_json(dict(reversed(list(obj.items()))))
    d = json.loads(text)
    assert d["a"] == [3, {"re": 1.0, "im": 2.0}, "inf"]


def test_seventeen_digits():
    x = 0.1 + 0.2
    assert float(io.fmt(x)) == x
