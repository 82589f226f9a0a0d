import json

import numpy as np
import pytest

from fluxlim.cli import main
from fluxlim.config import DEMOS, demo_config, load_config, parse_config, validate
from fluxlim.errors import ConfigError
from fluxlim.grid import integrate
from fluxlim.output import read_array, read_diag_csv, write_array


def small_config(**over):
    d = demo_config("demo1d")
    d["grid"] = {"cells": [16]}
    d["t_end"] = 0.5
    d["eps_conv"] = 10.0  # short runs are far from equilibrium
    d.update(over)
    return d


def write_cfg(tmp_path, d, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(d))
    return p


@pytest.mark.parametrize("name", DEMOS)
def test_demo_configs_parse(name):
    cfg = parse_config(demo_config(name))
    v = validate(cfg)
    assert integrate(v.state.n) == pytest.approx(2.0, rel=1e-12)
    assert integrate(v.state.m) == pytest.approx(1.0, rel=1e-12)
    assert v.warnings == []


def test_negative_initial_reports_cell():
    d = small_config()
    d["initial"]["c"] = {"kind": "constant", "value": -0.5}
    with pytest.raises(ConfigError, match=r"c0 negative at cell \[0\]"):
        validate(parse_config(d))


def test_theta_zero_warns():
    d = small_config()
    d["limiter"]["theta"] = 0.0
    v = validate(parse_config(d))
    assert any("proven regime" in w for w in v.warnings)


def test_errors_are_collected():
    d = small_config(schema=2, bogus=1, t_end=-1)
    with pytest.raises(ConfigError) as ei:
        parse_config(d)
    text = "\n".join(ei.value.errors)
    assert "schema" in text and "bogus" in text and "t_end" in text


def test_load_config_reports_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"schema": 1,\n  "grid": }')
    with pytest.raises(ConfigError, match="line 2"):
        load_config(p)


def test_file_initial_data(tmp_path):
    vals = np.linspace(0.5, 1.5, 16)
    np.save(tmp_path / "n0.npy", vals)
    d = small_config()
    d["initial"]["n"] = {"kind": "file", "path": "n0.npy"}
    v = validate(load_config(write_cfg(tmp_path, d)))
    assert np.array_equal(v.state.n.values, vals)


def test_random_velocity_is_projected():
    d = demo_config("demo2d")
    d["grid"] = {"cells": [16, 16]}
    d["initial"]["u"] = {"kind": "random", "seed": 3, "amplitude": 0.1}
    v = validate(parse_config(d))
    from fluxlim import _kernels as K

    assert np.max(np.abs(K.div(v.state.u.components, v.state.grid))) <= 1e-8
    assert v.state.u.linf() > 0


def test_cli_zero_length_run(tmp_path):
    p = write_cfg(tmp_path, small_config(t_end=0.0))
    assert main(["run", str(p), "--output-dir", str(tmp_path / "o")]) == 0
    recs, meta = read_diag_csv(tmp_path / "o" / "diag.csv")
    assert len(recs) == 1
    report = json.loads((tmp_path / "o" / "audit.json").read_text())
    assert report["converged-(1.10)"]["status"] == "skip"


def test_cli_guard_abort(tmp_path, capsys):
    p = write_cfg(tmp_path, small_config(guard=1e-9))
    out = tmp_path / "o"
    assert main(["run", str(p), "--output-dir", str(out)]) != 0
    assert "blow-up suspected" in (out / "dump.txt").read_text()
    assert (out / "diag.csv").exists()


def test_cli_config_error_exit(tmp_path, capsys):
    p = write_cfg(tmp_path, {"schema": 1})
    assert main(["run", str(p)]) == 2
    assert "config error" in capsys.readouterr().err


def test_cli_run_and_check(tmp_path, capsys):
    p = write_cfg(tmp_path, small_config())
    out = tmp_path / "o"
    assert main(["run", str(p), "--output-dir", str(out)]) == 0
    assert main(["check", str(out / "diag.csv")]) == 0
    tol = write_cfg(tmp_path, {"eps_conv": 1e-6}, "tol.json")
    assert main(["check", str(out / "diag.csv"), str(tol)]) == 1
    assert "fluxlim audit report" in capsys.readouterr().out


def test_sweep_single_theta_matches_run(tmp_path):
    p = write_cfg(tmp_path, small_config())
    assert main(["run", str(p), "--output-dir", str(tmp_path / "r")]) == 0
    assert main(["sweep", str(p), "--theta", "1", "--output-dir", str(tmp_path / "s")]) == 0
    a = (tmp_path / "r" / "diag.csv").read_bytes()
    b = (tmp_path / "s" / "theta_1" / "diag.csv").read_bytes()
    assert a == b
    assert (tmp_path / "s" / "sweep.csv").read_text().startswith("theta,")


def test_sweep_empty_list(tmp_path):
    p = write_cfg(tmp_path, small_config())
    assert main(["sweep", str(p), "--theta", ""]) == 2


def test_unknown_cases(capsys):
    assert main(["mms", "nope"]) == 2
    assert "pure-diffusion-1d" in capsys.readouterr().err
    assert main(["oracle", "nope"]) == 2


def test_cli_oracle_homogeneous(capsys):
    assert main(["oracle", "homogeneous"]) == 0
    assert capsys.readouterr().out.strip().endswith("pass")


def test_cli_mms(tmp_path):
    assert main(["mms", "pure-diffusion-1d", "--grids", "16,32", "--output-dir", str(tmp_path)]) == 0
    assert (tmp_path / "pure-diffusion-1d.csv").exists()


@pytest.mark.parametrize("fmt", ["raw", "both"])
def test_snapshots_roundtrip(tmp_path, fmt):
    d = small_config(snapshot_every=0.25, snapshot_format=fmt)
    out = tmp_path / "o"
    assert main(["run", str(write_cfg(tmp_path, d)), "--output-dir", str(out)]) == 0
    name, vals, t = read_array(out / "snapshots" / "n_00002.bin")
    assert name == "n" and t == 0.5 and vals.shape == (16,)
    assert np.all(vals >= 0)
    if fmt == "both":
        assert (out / "snapshots" / "state_00000.vtk").read_text().startswith("# vtk DataFile")


def test_array_roundtrip(tmp_path, rng):
    a = rng.standard_normal((3, 4, 5))
    write_array(tmp_path / "a.bin", "c", a, 0.1 + 0.2)
    name, b, t = read_array(tmp_path / "a.bin")
    assert name == "c" and t == 0.1 + 0.2 and np.array_equal(a, b)
    (tmp_path / "x.bin").write_bytes(b"garbage" * 20)
    with pytest.raises(ValueError):
        read_array(tmp_path / "x.bin")
