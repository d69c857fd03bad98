import csv
import io
import json

import numpy as np
import pytest

import lgfield.kernels
from lgfield.cli import main, recipe_names
from lgfield.config import parse_config
from lgfield.scanner import scan_plane

BASE = {
    "model": {"variant": "scalar3d", "L": 3.14159},
    "state": {"xi": 8.0, "ell": 1.0},
    "scheme": {"kind": "sign", "reference": "zero"},
    "query": {"s1": -1, "s2": 1, "t1": 0.0, "t2": 2.0},
    "time_unit": "inv_ell",
}


@pytest.fixture
def cfg_file(tmp_path):
    def write(doc):
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps(doc))
        return str(p)

    return write


def test_compute_json(cfg_file, capsys):
    assert main(["compute", "--config", cfg_file(BASE)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert set(out) >= {"q", "est_error", "residual_imag", "engine_used", "kernels"}
    assert out["engine_used"] == "polar"
    assert out["q"] < 0


def test_compute_from_stdin(monkeypatch, capsys):
    monkeypatch.setattr("sys.stdin", io.StringIO(json.dumps(BASE)))
    assert main(["compute", "--config", "-", "--engine", "cartesian"]) == 0
    assert json.loads(capsys.readouterr().out)["engine_used"] == "cartesian"


def test_kernels_dump(cfg_file, capsys):
    assert main(["kernels", "--config", cfg_file(BASE)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert set(out) >= {"a1", "a2", "b", "e1", "e2"}


@pytest.mark.parametrize(
    "patch, field",
    [
        ({"model": {"variant": "scalar3d", "L": -1.0}}, "model.L"),
        ({"model": {"variant": "scalar3d", "L": 1.0, "width": 2}}, "model.width"),
        ({"quadrature": {"abs_tol": 1e-9, "bogus": 1}}, "quadrature.bogus"),
        ({"scheme": {"kind": "window"}}, "scheme.w"),
        ({"query": {"s1": 2, "s2": 1, "t1": 0.0, "t2": 1.0}}, "query.s1"),
        ({"time_unit": "fortnight"}, "time_unit"),
    ],
)
def test_config_errors_exit_2(cfg_file, capsys, patch, field):
    assert main(["compute", "--config", cfg_file({**BASE, **patch})]) == 2
    assert field in capsys.readouterr().err


def test_numeric_failure_exit_3(cfg_file, capsys):
    doc = {**BASE, "quadrature": {"engine": "cartesian", "max_subdiv": 2}}
    assert main(["compute", "--config", cfg_file(doc)]) == 3
    err = capsys.readouterr().err
    assert "cartesian" in err and "QuadratureFailure" in err


def test_scan_csv_and_sidecar(tmp_path, cfg_file):
    out = tmp_path / "grid.csv"
    args = ["scan", "--config", cfg_file(BASE), "--x", "ellL:2:3.5:2", "--y", "ellT2:1:3:2",
            "--out", str(out)]
    assert main(args) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 5
    assert lines[0] == "x_value,y_value,q,est_error,robust_negative"
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    # 17 significant digits, so every double survives the text round trip
    for row in rows:
        for key in ("x_value", "y_value", "q", "est_error"):
            assert row[key] == "%.17g" % float(row[key])

    side = json.loads(out.with_suffix(".json").read_text())
    assert side["axes"]["shape"] == [2, 2]
    for key in ("min_point", "refined_min", "fraction_neg", "min_q", "threshold_crossings",
                "failed_cells", "version", "config"):
        assert key in side

    # the sidecar alone reproduces the grid bit for bit
    cfg = parse_config(side["config"])
    grid = scan_plane(cfg, *cfg.scan)
    qs = np.array([float(r["q"]) for r in rows]).reshape(2, 2)
    assert np.array_equal(grid.values, qs)


def test_scan_is_bit_stable(tmp_path, cfg_file):
    paths = []
    for threads in (1, 2):
        p = tmp_path / f"g{threads}.csv"
        assert main(["scan", "--config", cfg_file(BASE), "--x", "xi:0:8:3", "--y", "ellT2:1:3:3",
                     "--threads", str(threads), "--out", str(p)]) == 0
        paths.append(p)
    assert paths[0].read_text() == paths[1].read_text()


def test_scan_needs_axes(cfg_file, capsys):
    assert main(["scan", "--config", cfg_file(BASE)]) == 2
    assert main(["scan", "--config", cfg_file(BASE), "--x", "xi:0:1", "--y", "r:0:1:2"]) == 2
    assert "--x" in capsys.readouterr().err


def test_scan_partial_failures(tmp_path, cfg_file, capsys):
    doc = {**BASE, "quadrature": {"degenerate_shift": False}, "time_unit": "natural"}
    base = ["scan", "--config", cfg_file(doc), "--x", "xi:0:8:2", "--y", "ellT2:0:1:2"]
    assert main(base) == 3
    out = tmp_path / "partial.csv"
    assert main(base + ["--allow-partial", "--out", str(out)]) == 0
    assert "nan" in out.read_text()
    side = json.loads(out.with_suffix(".json").read_text())
    assert len(side["failed_cells"]) == 2


def test_recipes_listed(capsys):
    assert main(["recipes"]) == 0
    names = capsys.readouterr().out.split()
    assert names == recipe_names()
    assert "fig1_left" in names and "fig9" in names


def test_unknown_recipe(capsys):
    assert main(["compute", "--recipe", "fig99"]) == 2


@pytest.mark.parametrize(
    "recipe, x, y",
    [
        ("fig8_left", "wL:0.35:0.5:4", "t2_over_L:0.9:1.5:7"),
        ("fig9", "r:0:0.6:4", "t2_over_L:0.9:1.5:7"),
    ],
)
def test_window_recipes_violate(tmp_path, capsys, recipe, x, y):
    out = tmp_path / "w.csv"
    assert main(["scan", "--recipe", recipe, "--x", x, "--y", y, "--out", str(out)]) == 0
    side = json.loads(out.with_suffix(".json").read_text())
    assert side["min_q"] < -0.02


def test_verify_quick_passes(capsys):
    assert main(["verify", "quick", "--seed", "3"]) == 0
    assert "all 10 checks passed" in capsys.readouterr().out


def test_verify_catches_kernel_mutation(monkeypatch, capsys):
    original = lgfield.kernels.kernel_B_sq

    def mutated(*args, **kw):
        return -original(*args, **kw)

    monkeypatch.setattr(lgfield.kernels, "kernel_B_sq", mutated)
    assert main(["verify", "quick"]) == 1
    assert "FAIL" in capsys.readouterr().out
