"""CSV / JSON readers and writers.

Every float is written with 17 significant digits so that reading a file back
reproduces the numbers exactly.  JSON is written with sorted keys so reruns
produce identical bytes.
"""

import csv
import json
from pathlib import Path

import numpy as np

from .dispersion import TabulatedDispersion
from .evolution import EvolutionResult
from .fracops import TimeSignal
from .grid import DensityField, SpatialGrid, SpectralField
from .moments import MomentSeries, PowerLawFit


def fmt(x):
    return format(float(x), ".17g")


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    if isinstance(obj, complex):
        return {"re": _to_jsonable(obj.real), "im": _to_jsonable(obj.imag)}
    return obj


def dump_json(obj, path=None):
    text = json.dumps(_to_jsonable(obj), indent=2, sort_keys=True) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _read_rows(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r if row]


_AXES = ("x", "y")
_KAXES = ("kx", "ky")


def grid_header(grid):
    return {"dim": grid.dim, "N": grid.points_per_axis, "L": grid.length_per_axis}


def _grid_from_header(h):
    return SpatialGrid(int(h["dim"]), int(h["N"]), float(h["L"]))


# ---------------------------------------------------------------- fields


def write_field(stem, field, time=0.0):
    """``stem.csv`` (coordinates..., re, im) plus the ``stem.json`` header."""
    stem = Path(stem)
    g = field.grid
    coords = [c.ravel() for c in g.coordinates]
    vals = field.values.ravel()
    rows = ([fmt(c[i]) for c in coords] + [fmt(vals[i].real), fmt(vals[i].imag)] for i in range(g.size))
    _write_rows(stem.with_suffix(".csv"), list(_AXES[: g.dim]) + ["re", "im"], rows)
    dump_json({**grid_header(g), "time": float(time), "domain": "real"}, stem.with_suffix(".json"))


def read_field(stem):
    stem = Path(stem)
    head = json.loads(stem.with_suffix(".json").read_text())
    grid = _grid_from_header(head)
    _, rows = _read_rows(stem.with_suffix(".csv"))
    arr = np.array(rows, dtype=float)
    return DensityField(grid, arr[:, -2] + 1j * arr[:, -1]), float(head["time"])


def write_spectrum(stem, spec, time=0.0):
    stem = Path(stem)
    g = spec.grid
    ks = [k.ravel() for k in g.wavenumbers]
    vals = spec.modes.ravel()
    rows = ([fmt(k[i]) for k in ks] + [fmt(vals[i].real), fmt(vals[i].imag)] for i in range(g.size))
    _write_rows(stem.with_suffix(".csv"), list(_KAXES[: g.dim]) + ["re", "im"], rows)
    dump_json({**grid_header(g), "time": float(time), "domain": "spectral"}, stem.with_suffix(".json"))


def read_spectrum(stem):
    stem = Path(stem)
    head = json.loads(stem.with_suffix(".json").read_text())
    grid = _grid_from_header(head)
    _, rows = _read_rows(stem.with_suffix(".csv"))
    arr = np.array(rows, dtype=float)
    return SpectralField(grid, arr[:, -2] + 1j * arr[:, -1]), float(head["time"])


# ---------------------------------------------------------------- time signals


def write_time_signal(path, sig):
    rows = ([fmt(t), fmt(v.real), fmt(v.imag)] for t, v in zip(sig.times, sig.samples))
    _write_rows(path, ["t", "re", "im"], rows)


def read_time_signal(path):
    _, rows = _read_rows(path)
    arr = np.array(rows, dtype=float)
    t = arr[:, 0]
    dt = (t[-1] - t[0]) / (t.size - 1)
    return TimeSignal(t[0], dt, arr[:, 1] + 1j * arr[:, 2])


# ---------------------------------------------------------------- dispersion tables


def write_dispersion(path, dispersion, kvecs):
    kvecs = np.asarray(kvecs, dtype=float).reshape(-1, dispersion.dim)
    e = np.asarray(dispersion.evaluate(kvecs), dtype=np.complex128)
    status = dispersion.status(kvecs)
    head = list(_KAXES[: dispersion.dim]) if dispersion.dim > 1 else ["k"]
    rows = ([fmt(x) for x in k] + [fmt(v.real), fmt(v.imag), str(s)] for k, v, s in zip(kvecs, e, status))
    _write_rows(path, head + ["re_E", "im_E", "status"], rows)


def read_dispersion(path):
    header, rows = _read_rows(path)
    dim = len(header) - 3
    k = np.array([r[:dim] for r in rows], dtype=float)
    e = np.array([float(r[dim]) + 1j * float(r[dim + 1]) for r in rows])
    status = [r[dim + 2] for r in rows]
    return TabulatedDispersion(k, e, status, dim)


# ---------------------------------------------------------------- evolutions


def write_evolution(directory, run):
    """One spectral snapshot per time plus ``manifest.json``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    names = []
    for i, t in enumerate(run.times):
        name = f"snapshot_{i:05d}"
        write_spectrum(d / name, run.snapshot(i), t)
        names.append(name)
    manifest = {
        "solver": run.provenance,
        "params": run.params,
        "grid": grid_header(run.grid),
        "times": [fmt(t) for t in run.times],
        "snapshots": names,
    }
    dump_json(manifest, d / "manifest.json")


def read_evolution(directory):
    d = Path(directory)
    m = json.loads((d / "manifest.json").read_text())
    grid = _grid_from_header(m["grid"])
    modes = [read_spectrum(d / name)[0].modes for name in m["snapshots"]]
    times = [float(t) for t in m["times"]]
    return EvolutionResult(grid, times, np.array(modes), m["solver"], m["params"])


# ---------------------------------------------------------------- moment series and fits


def write_series(path, series):
    rows = (
        [fmt(t), fmt(v.real), fmt(v.imag), "1" if f else "0"]
        for t, v, f in zip(series.times, series.values, series.divergent)
    )
    _write_rows(path, ["t", "value_re", "value_im", "divergent_flag"], rows)


def series_dict(series):
    return {
        "kind": series.kind,
        "multi_index": None if series.multi_index is None else list(series.multi_index),
        "domain_checked": series.domain_checked,
        "t": [float(t) for t in series.times],
        "value_re": [float(v.real) for v in series.values],
        "value_im": [float(v.imag) for v in series.values],
        "divergent_flag": [bool(f) for f in series.divergent],
    }


def read_series(path, kind="variance", multi_index=None):
    path = Path(path)
    if path.suffix == ".json":
        d = json.loads(path.read_text())
        vals = np.array(d["value_re"], dtype=float) + 1j * np.array(d["value_im"], dtype=float)
        return MomentSeries(d["t"], vals, d.get("kind", kind), d.get("multi_index"), d["divergent_flag"], d.get("domain_checked", False))
    header, rows = _read_rows(path)
    expected = ["t", "value_re", "value_im", "divergent_flag"]
    if header != expected:
        raise ValueError(f"{path}: expected columns {expected}, got {header}")
    arr = np.array(rows, dtype=float)
    return MomentSeries(arr[:, 0], arr[:, 1] + 1j * arr[:, 2], kind, multi_index, arr[:, 3] != 0)


def write_fit(path, fit):
    return dump_json(fit.as_dict(), path)


def read_fit(path):
    d = json.loads(Path(path).read_text())
    return PowerLawFit(float(d["C"]), float(d["alpha"]), float(d["r2"]), tuple(d["window"]), int(d.get("n_points", 0)))
