import json
import math
import shutil
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from weylgp.cli import main
from weylgp.io import read_data_csv, read_grid_csv, write_data_csv

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def workdir(tmp_path):
    dst = tmp_path / "configs"
    shutil.copytree(CONFIGS, dst)
    return dst


def run(cmd, config, out, *extra):
    return main([cmd, "--config", str(config), "--out", str(out), *extra])


def write(path, data):
    path.write_text(json.dumps(data))
    return path


@pytest.mark.parametrize("name", ["double_drop", "double_drop_two_points", "snake"])
def test_shipped_planar_configs(workdir, tmp_path, name):
    out = tmp_path / "out"
    cfg = workdir / f"{name}.json"
    t0 = time.perf_counter()
    assert run("intersect", cfg, out) == 0
    assert run("gp", cfg, out) == 0
    assert time.perf_counter() - t0 < 60
    gp = json.loads(cfg.read_text())["gp"]
    pts, mean, sd = read_grid_csv(out / gp["out"])
    inside = np.isfinite(mean[:, 0])
    assert inside.any() and (~inside).any()
    assert np.all(np.isfinite(sd[inside]))
    assert (out / gp["svg"]).read_text().startswith("<svg")


def test_double_drop_grid_vanishes_near_boundary(workdir, tmp_path):
    out = tmp_path / "out"
    cfg = workdir / "double_drop.json"
    assert run("intersect", cfg, out) == 0
    assert run("gp", cfg, out) == 0
    pts, mean, _ = read_grid_csv(out / "double_drop/grid_left.csv")
    inside = np.isfinite(mean[:, 0])
    f = pts[:, 1] ** 2 - np.sin(pts[:, 0]) ** 4
    norms = np.linalg.norm(mean, axis=1)
    # the field shrinks with the distance to the boundary curve
    near = inside & (np.abs(f) < 5e-3)
    assert near.sum() >= 4 and norms[near].max() < 1e-4
    assert norms[inside].max() > 0.5
    # the datum is reproduced in direction
    grid = mean.reshape(60, 30, 2)
    centre = grid[30, 15]
    assert centre[0] < 0


def test_regression_and_box_boundary_configs(workdir, tmp_path):
    out = tmp_path / "out"
    assert run("gp", workdir / "regression_1d.json", out) == 0
    assert run("gp", workdir / "regression_1d_derivatives.json", out) == 0
    pts, mean, sd = read_grid_csv(out / "regression_1d/values.csv")
    i = int(np.argmin(np.abs(pts[:, 0] - 2.0)))
    assert abs(mean[i, 0] - 0.9904) < 1e-3
    _, mean2, _ = read_grid_csv(out / "regression_1d/values_derivatives.csv")
    assert mean2.shape[1] == 2
    assert run("gp", workdir / "box_boundaries.json", out) == 0
    for kind in ("dirichlet-box-poly", "dirichlet-box-exp", "dirichlet-box-sd",
                 "dirichlet-neumann-exp", "dirichlet-neumann-sd"):
        pts, _, sd = read_grid_csv(out / f"box_boundaries/{kind}.csv")
        assert sd[0, 0] == 0.0 and abs(sd[-1, 0]) < 1e-12
        if kind != "dirichlet-box-poly":
            assert np.max(sd) <= 1.0


def test_outputs_are_byte_identical(workdir, tmp_path):
    cfg = workdir / "double_drop.json"
    for sub in ("a", "b"):
        assert run("intersect", cfg, tmp_path / sub) == 0
        assert run("gp", cfg, tmp_path / sub, "--seed", "7", "--threads", "2") == 0
    for rel in ("double_drop/grid_left.csv", "double_drop/intersection.json", "double_drop/field_left.svg"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_samples_follow_seed(tmp_path):
    cfg = write(tmp_path / "c.json", {
        "presentation": {"generators": [], "derivations": ["dx"], "table": [], "coordinates": ["x"]},
        "gp": {"P": [["1"]], "grid": {"box": [[0, 1]], "resolution": 5}, "out": "g.csv",
               "samples": {"n": 3, "out": "s.npy"}},
    })
    for sub, seed in (("a", "1"), ("b", "1"), ("c", "2")):
        assert run("gp", cfg, tmp_path / sub, "--seed", seed) == 0
    a, b, c = (np.load(tmp_path / s / "s.npy") for s in "abc")
    assert a.shape == (3, 5, 1)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_parametrize_and_nullspace(tmp_path):
    cfg = write(tmp_path / "c.json", {
        "presentation": "preset:weyl-2d",
        "parametrize": {"matrix": [["dx", "dy"]], "out": "p.json"},
        "nullspace": {"matrix": [["dx", "dy"]], "out": "k.json"},
    })
    assert run("parametrize", cfg, tmp_path) == 0
    assert json.loads((tmp_path / "p.json").read_text())["parametrizable"] is True
    assert run("nullspace", cfg, tmp_path, "--side", "right") == 0
    k = json.loads((tmp_path / "k.json").read_text())
    assert k["shape"] == [2, 1] and k["side"] == "right"
    assert run("nullspace", cfg, tmp_path, "--side", "left") == 0
    cfg2 = write(tmp_path / "d.json", {"presentation": "preset:weyl-2d",
                                       "parametrize": {"matrix": [["dx"]], "out": "q.json"}})
    assert run("parametrize", cfg2, tmp_path) == 0
    q = json.loads((tmp_path / "q.json").read_text())
    assert q["parametrizable"] is False and q["A_prime"] == [["1"]]


def test_janet_dump(tmp_path):
    cfg = write(tmp_path / "c.json", {"presentation": "preset:polynomial-2d",
                                      "janet": {"generators": ["x*dx + y*dy - 2", "dx^2 + dy^2"]}})
    assert run("janet", cfg, tmp_path) == 0
    dump = json.loads((tmp_path / "janet_basis.json").read_text())
    assert dump["complete"] and len(dump["elements"]) >= 2


def test_render_from_grid(workdir, tmp_path):
    out = tmp_path / "out"
    cfg = workdir / "double_drop.json"
    assert run("intersect", cfg, out) == 0
    assert run("gp", cfg, out) == 0
    assert run("render", cfg, out, "--arrow-scale", "2") == 0
    svg = (out / "double_drop/field_left_rendered.svg").read_text()
    assert svg.count('fill="red"') == 1
    assert 'stroke="gray"' in svg


def test_exit_codes(tmp_path, capsys):
    bad_json = tmp_path / "bad.json"
    bad_json.write_text('{"janet": {\n  "generators": [}')
    assert run("janet", bad_json, tmp_path) == 2
    assert "line 2" in capsys.readouterr().err

    cfg = write(tmp_path / "p.json", {"presentation": "preset:polynomial-2d", "janet": {"generators": ["x +* dx"]}})
    assert run("janet", cfg, tmp_path) == 2
    assert "line 1, column 4" in capsys.readouterr().err

    cfg = write(tmp_path / "a.json", {"presentation": "preset:gaussian-bump",
                                      "janet": {"generators": ["E*dx - x"],
                                                "ordering": {"kind": "degrevlex", "weights": [5, 1, 1, 1, 1]}}})
    assert run("janet", cfg, tmp_path) == 3
    assert "(3, 1)" in capsys.readouterr().err

    cfg = write(tmp_path / "n.json", {
        "presentation": {"generators": [], "derivations": ["dx"], "table": [], "coordinates": ["x"]},
        "gp": {"P": [["1"]], "lengthscale": 1.0, "data": "d.csv", "grid": {"box": [[0, 1]], "resolution": 3}},
    })
    (tmp_path / "d.csv").write_text("x1,component,value,noise_var\n0,1,1,-5\n")
    assert run("gp", cfg, tmp_path) == 2

    cfg = write(tmp_path / "s.json", {"presentation": "preset:double-drop",
                                      "intersect": {"B1": [["dy"], ["-dx"]],
                                                    "boundary": {"kind": "dirichlet-box-sd", "d": 2, "ell": 2}}})
    assert run("intersect", cfg, tmp_path) == 2
    assert "numeric-only" in capsys.readouterr().err

    cfg = write(tmp_path / "m.json", {"presentation": "preset:double-drop", "gp": {"P": "missing.json"}})
    assert run("gp", cfg, tmp_path) == 2
    assert run("janet", tmp_path / "nope.json", tmp_path) == 2


def test_data_csv_round_trip(tmp_path):
    (tmp_path / "d.csv").write_text("x1,x2,component,value,noise_var\npi/2,0,1,-1,0.01\n0.5,1,2,3,0\n")
    data = read_data_csv(tmp_path / "d.csv", 2)
    assert list(data.components) == [0, 1]
    assert data.points[0, 0] == math.pi / 2
    write_data_csv(tmp_path / "e.csv", data)
    again = read_data_csv(tmp_path / "e.csv", 2)
    assert np.array_equal(again.points, data.points) and np.array_equal(again.values, data.values)
    (tmp_path / "bad.csv").write_text("x,component,value\n1,1,1\n")
    with pytest.raises(ValueError):
        read_data_csv(tmp_path / "bad.csv", 1)


def test_console_script(workdir, tmp_path):
    exe = shutil.which("weylgp")
    cmd = [exe] if exe else [sys.executable, "-m", "weylgp.cli"]
    proc = subprocess.run(cmd + ["intersect", "--config", str(workdir / "double_drop.json"),
                                 "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["shape"] == [2, 1]


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    import weylgp.cli as cli
    from weylgp.gp import NumericalError

    def fail(*args, **kwargs):
        raise NumericalError("covariance not positive definite after jitter")

    monkeypatch.setattr(cli, "posterior", fail)
    cfg = write(tmp_path / "n.json", {
        "presentation": {"generators": [], "derivations": ["dx"], "table": [], "coordinates": ["x"]},
        "gp": {"P": [["1"]], "data": "d.csv", "grid": {"box": [[0, 1]], "resolution": 3}},
    })
    (tmp_path / "d.csv").write_text("x1,component,value,noise_var\n0,1,1,0\n")
    assert run("gp", cfg, tmp_path) == 4
