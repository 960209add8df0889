import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from fracdiff import kernels
from fracdiff.cli import main, resolve_config
from fracdiff.errors import ConfigError


@pytest.fixture(autouse=True)
def _reset_threads():
    yield
    kernels.set_num_threads(None)


def _config(tmp_path, **over):
    cfg = {
        "experiment": "weyl",
        "grid": {"dim": 1, "n": 256, "length": 60.0},
        "initial": {"mean": 0.0, "sigma": 1.0},
        "evolution": {"beta": 1.0, "t_max": 10.0, "n_snapshots": 40},
    }
    for key, value in over.items():
        if isinstance(value, dict) and isinstance(cfg.get(key), dict):
            cfg[key] = {**cfg[key], **value}
        else:
            cfg[key] = value
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def _run(tmp_path, *extra, **over):
    out = tmp_path / "out"
    code = main(["run", "--config", str(_config(tmp_path, **over)), "--out", str(out), *extra])
    return code, out


def test_weyl_one_is_ordinary_diffusion(tmp_path):
    code, out = _run(tmp_path)
    assert code == 0
    fit = json.loads((out / "fit.json").read_text())
    assert set(fit) == {"C", "alpha", "r2", "window"}
    assert fit["alpha"] == pytest.approx(1.0, abs=0.005)
    assert fit["C"] == pytest.approx(2.0, rel=0.005)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["experiment"] == "weyl"
    assert manifest["kernel_backend"] in ("cython", "python")
    assert "variance.csv" in manifest["artifacts"]
    header = (out / "variance.csv").read_text().splitlines()[0]
    assert header == "t,value_re,value_im,divergent_flag"


def test_caputo_exact_run(tmp_path):
    code, out = _run(tmp_path, experiment="caputo_exact", evolution={"beta": 0.5})
    assert code == 0
    assert json.loads((out / "fit.json").read_text())["alpha"] == pytest.approx(0.5, abs=0.01)


def test_format_json_only(tmp_path):
    code, out = _run(tmp_path, "--format", "json")
    assert code == 0
    assert (out / "variance.json").exists() and not (out / "variance.csv").exists()


def test_outputs_identical_across_thread_counts(tmp_path):
    outs = []
    for threads in ("1", "4"):
        d = tmp_path / threads
        d.mkdir()
        over = {"experiment": "perturbative", "evolution": {"epsilon": 0.05, "dt": 0.05, "t_max": 2.0}}
        code, out = _run(d, "--threads", threads, **over)
        assert code == 0
        outs.append(out)
    for name in ("variance.csv", "cumulant_2.csv", "fit.json", "summary.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


@pytest.mark.parametrize(
    "over,field",
    [
        ({"initial": {"sigma": -1.0}}, "initial.sigma"),
        ({"evolution": {"foo": 1}}, "evolution.foo"),
        ({"evolution": {"beta": 2.5}}, "evolution.beta"),
        ({"grid": {"n": 100}}, "grid.n"),
        ({"experiment": "caputo_l1", "evolution": {"beta": 0.7}}, "evolution.dt"),
        ({"experiment": "perturbative", "evolution": {"epsilon": 0.5, "dt": 0.1}}, "evolution.epsilon"),
        ({"experiment": "spectral"}, "dispersion"),
        ({"analysis": {"fit_window": [5.0, 20.0]}}, "analysis.fit_window"),
        ({"experiment": "nope"}, "experiment"),
    ],
)
def test_config_errors_exit_two(tmp_path, capsys, over, field):
    code, out = _run(tmp_path, **over)
    assert code == 2
    err = capsys.readouterr().err
    assert f"invalid configuration: {field}:" in err
    assert not out.exists()


def test_missing_config_file(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "absent.json")]) == 2
    assert "--config" in capsys.readouterr().err


def test_numerical_failure_exits_three(tmp_path, capsys):
    # (s + k^2)(s + 1) has two admissible zeros, so the spectral solver refuses
    disp = {"kind": "polynomial", "coefficients": [[1.0], [1.0, 0.0, -1.0], [0.0, 0.0, -1.0]]}
    code, _ = _run(tmp_path, experiment="spectral", dispersion=disp)
    assert code == 3
    assert "numerical failure in evolution" in capsys.readouterr().err


def test_dispersion_scan(tmp_path):
    disp = {"kind": "closed", "drift": 1.0, "diffusivity": 0.5, "mu3": 0.1}
    code, out = _run(tmp_path, experiment="dispersion_scan", dispersion=disp)
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["cumulant_rates"]["2"]["value"]["re"] == pytest.approx(1.0, abs=1e-8)
    assert (out / "dispersion.csv").exists()


def test_derivative_test(tmp_path):
    over = {"experiment": "derivative_test", "evolution": {"beta": 0.5, "dt": 0.01, "t_max": 1.0}}
    code, out = _run(tmp_path, **over)
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["caputo_max_abs_error"] <= 1e-2


def test_resolve_config_defaults():
    cfg = resolve_config(
        {"experiment": "weyl", "grid": {"dim": 1, "n": 64, "length": 20.0}, "evolution": {"beta": 1.0, "t_max": 1.0}}
    )
    assert cfg["initial"]["sigma"] == 1.0
    assert cfg["analysis"]["domain_check"] is True
    with pytest.raises(ConfigError) as exc:
        resolve_config({"experiment": "weyl"})
    # missing sections are reported in alphabetical order
    assert exc.value.field == "evolution"


def test_verify_suites_pass_and_are_reproducible(tmp_path, capsys):
    assert main(["verify", "commutation", "--out", str(tmp_path)]) == 0
    first = capsys.readouterr().out
    assert main(["verify", "commutation"]) == 0
    assert capsys.readouterr().out == first
    report = json.loads((tmp_path / "verify_commutation.json").read_text())
    assert report["passed"] and report["suite"] == "commutation"


def test_fit_subcommand(tmp_path, capsys):
    _, out = _run(tmp_path)
    capsys.readouterr()
    assert main(["fit", str(out / "variance.csv"), "--window", "5", "10"]) == 0
    fit = json.loads(capsys.readouterr().out)
    assert fit["alpha"] == pytest.approx(1.0, abs=0.005)
    assert fit["window"] == [5.0, 10.0]
    assert main(["fit", str(out / "variance.csv"), "--window", "9.9", "10"]) == 3


def test_ml_eval(tmp_path, capsys):
    assert main(["ml-eval", "--beta", "0.5", "--z-min", "-30", "--num", "4"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "z,value,region"
    assert [line.split(",")[2] for line in lines[1:]] == ["asymptotic", "asymptotic", "integral", "series"]
    assert main(["ml-eval", "--beta", "0.5", "--format", "json", "--out", str(tmp_path)]) == 0
    d = json.loads((tmp_path / "ml_eval.json").read_text())
    assert len(d["value"]) == 101
    assert main(["ml-eval", "--beta", "2.5"]) == 2


def _subprocess(args, env_extra):
    env = {**os.environ, **env_extra}
    return subprocess.run([sys.executable, "-m", "fracdiff", *args], capture_output=True, text=True, env=env)


def test_threads_environment_variable(tmp_path):
    cfg = _config(tmp_path)
    res = _subprocess(["run", "--config", str(cfg), "--out", str(tmp_path / "o")], {"FRACDIFF_THREADS": "3"})
    assert res.returncode == 0, res.stderr
    assert json.loads(Path(tmp_path / "o" / "manifest.json").read_text())["threads"] == 3
    bad = _subprocess(["run", "--config", str(cfg), "--out", str(tmp_path / "p")], {"FRACDIFF_THREADS": "many"})
    assert bad.returncode == 2
    assert "FRACDIFF_THREADS" in bad.stderr


@pytest.mark.parametrize("path", sorted((Path(__file__).resolve().parents[1] / "configs").glob("*.json")), ids=lambda p: p.stem)
def test_bundled_configs_validate(path):
    from fracdiff.cli import load_config

    cfg = load_config(path)
    assert cfg["output"]["directory"].startswith("out/")
