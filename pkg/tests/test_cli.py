import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from ballinterp.cli import (ConfigError, deterministic_part, generate_sequence, load_config,
                            main, read_points_csv, run)


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_radial_sequence():
    pts = generate_sequence({"kind": "radial", "q": 0.5, "count": 3}, 0, n=2)
    assert_allclose(pts, [[0.5, 0], [0.75, 0], [0.875, 0]])
    pts = generate_sequence({"kind": "radial", "q": 0.5, "count": 2,
                             "direction": [[0, 1], 1]}, 0, n=2)
    assert_allclose(pts[0], 0.5 * np.array([1j, 1]) / np.sqrt(2))


def test_empty_and_deterministic_sequences():
    assert generate_sequence({"kind": "radial", "count": 0}, 0).shape == (0, 2)
    assert generate_sequence({"kind": "uniform", "count": 0}, 0, n=3).shape == (0, 3)
    spec = {"kind": "uniform", "count": 5, "radius": 0.8}
    assert_allclose(generate_sequence(spec, 7), generate_sequence(spec, 7))
    assert not np.allclose(generate_sequence(spec, 7), generate_sequence(spec, 8))


def test_uniform_sequence_law():
    # t = |z|^2 / (1 - |z|^2) is distributed as T U^(1/n), so E t = T n / (n + 1)
    n, radius = 2, 0.9
    pts = generate_sequence({"kind": "uniform", "count": 20000, "radius": radius}, 1, n=n)
    r2 = np.sum(np.abs(pts) ** 2, axis=1)
    assert np.all(r2 < radius ** 2)
    T = radius ** 2 / (1 - radius ** 2)
    assert_allclose(np.mean(r2 / (1 - r2)), T * n / (n + 1), rtol=0.02)


@pytest.mark.parametrize("spec", [{"kind": "radial", "q": 1.0, "count": 3},
                                  {"kind": "radial", "q": 0.5, "count": -1},
                                  {"kind": "uniform", "count": 3, "radius": 1.0},
                                  {"kind": "spiral", "count": 3}])
def test_sequence_errors(spec):
    with pytest.raises(ConfigError):
        generate_sequence(spec, 0)


def test_csv_reader(tmp_path):
    path = write(tmp_path, "a.csv", "re1,im1,re2,im2,mass\n0.1,0.2,0,0,0.5\n\n-0.3,0,0,0.4,1\n")
    pts, masses = read_points_csv(path)
    assert_allclose(pts, [[0.1 + 0.2j, 0], [-0.3, 0.4j]])
    assert_allclose(masses, [0.5, 1.0])
    pts, masses = read_points_csv(write(tmp_path, "b.csv", "re1,im1\n"))
    assert pts.shape == (0, 1) and masses is None


@pytest.mark.parametrize("text,line", [("re1,im2\n0,0\n", "line 1"),
                                       ("re1,im1\n0.1,0\n0.2\n", "line 3"),
                                       ("re1,im1\n0.1,0\nfoo,0\n", "line 3"),
                                       ("re1,im1\n1.0,0.5\n", "line 2"),
                                       ("re1,im1,mass\n0.1,0,-1\n", "line 2")])
def test_csv_errors_name_the_line(tmp_path, text, line):
    with pytest.raises(ConfigError, match=line):
        read_points_csv(write(tmp_path, "bad.csv", text))


def test_config_validation(tmp_path):
    cfg = load_config(write(tmp_path, "c.json", json.dumps(
        {"schema": 1, "n": 3, "seed": 5, "tol": {"forelli": 1e-5}})), seed=9)
    assert cfg.n == 3 and cfg.seed == 9 and cfg.tol["forelli"] == 1e-5
    for bad in ({"n": 2}, {"schema": 2}, {"schema": 1, "colour": 1},
                {"schema": 1, "tol": {"nope": 1}}, {"schema": 1, "p": -1},
                {"schema": 1, "tol": {"mass": 0}}):
        with pytest.raises(ConfigError):
            load_config(write(tmp_path, "bad.json", json.dumps(bad)))


def test_quad_defaults_pass(capsys):
    assert main(["quad", "--json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["passed"] and report["subcommand"] == "quad"
    names = {c["name"] for c in report["checks"]["quad"]}
    assert {"mass", "moments", "forelli"} <= names
    assert "timing" in report and "version" in report


def test_carleson_empty_sequence(tmp_path, capsys):
    path = write(tmp_path, "empty.csv", "re1,im1,re2,im2\n")
    assert main(["carleson", "--points", str(path), "--json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["checks"]["carleson"][0]["value"] == 0.0


def test_exit_codes(tmp_path, capsys):
    bad = write(tmp_path, "bad.csv", "re1,im1,re2,im2\n0.1,0,0,0\n0.2,0,zz,0\n")
    assert main(["carleson", "--points", str(bad)]) == 2
    assert "line 3" in capsys.readouterr().err
    strict = write(tmp_path, "strict.json", json.dumps(
        {"schema": 1, "tol": {"involution": 1e-30}, "options": {"geom_samples": 50}}))
    assert main(["geom", "--config", str(strict)]) == 1
    low_p = write(tmp_path, "lowp.json", json.dumps({"schema": 1, "p": 1.5, "alpha": 1.0}))
    assert main(["drury", "--config", str(low_p)]) == 2
    assert "p >= 2" in capsys.readouterr().err
    dup = write(tmp_path, "dup.json", json.dumps(
        {"schema": 1, "sequence": {"kind": "inline", "rows": [[0.1, 0, 0, 0], [0.1, 0, 0, 0]]}}))
    assert main(["interp", "--config", str(dup)]) == 1


def test_out_writes_report_and_tables(tmp_path, capsys):
    out = tmp_path / "rep.json"
    assert main(["carleson", "--out", str(out), "--seed", "3"]) == 0
    report = json.loads(out.read_text())
    assert report["config"]["seed"] == 3
    assert (tmp_path / "rep.carleson.carleson.csv").exists()
    assert "PASS" in capsys.readouterr().out


def test_reports_are_deterministic():
    cfg = load_config(seed=11)
    a, _ = run(cfg, "carleson")
    b, _ = run(cfg, "carleson")
    assert json.dumps(deterministic_part(a), sort_keys=True) == \
        json.dumps(deterministic_part(b), sort_keys=True)
