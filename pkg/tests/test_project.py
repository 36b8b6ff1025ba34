import json
import os

import numpy as np
import numpy.testing as npt
import pandas as pd

from pytest import raises

from quasiplanes.config  import ExperimentConfig
from quasiplanes.errors  import BadConfig
from quasiplanes.project import ExperimentProject
from quasiplanes.tools   import records

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def project_for(name, tmp_path, **changes):
    config = ExperimentConfig.from_json(os.path.join(FIXTURES, name))
    d = config.to_dict()
    for section, values in changes.items():
        if isinstance(values, dict):
            d[section].update(values)
        else:
            d[section] = values
    d["out_dir"] = str(tmp_path)
    return ExperimentProject(ExperimentConfig.from_dict(d), quiet=True)


def read(tmp_path, name):
    return records.from_external(str(tmp_path/name))


def test_flatness_of_a_line(tmp_path):
    project = project_for("flatness_line.json", tmp_path)
    df = project.compute_flatness()

    assert df["scale"].tolist() == [0.5, 0.25]
    doc = read(tmp_path, "flatness.json")
    assert doc["config_hash"] == project.config_hash
    assert (doc["n"], doc["N"], doc["samples"]) == (1, 2, 17)
    profile = doc["profiles"][0]
    assert profile["index"] == 8
    npt.assert_allclose(profile["beta"], 0.0, atol=1e-9)
    # the plane side is only compared against the samples
    assert all(t <= 0.0625/r + 1e-12 for t, r in zip(profile["theta"], profile["scales"]))
    assert doc["reifenberg"]["passed"]
    assert doc["linear_approximation"]["passed"]

    table = read(tmp_path, "flatness.csv")
    assert set(table["config_hash"]) == {project.config_hash}


def test_history(tmp_path):
    project = project_for("flatness_line.json", tmp_path)
    project.compute_flatness()
    project.compute_generation()
    history = read(tmp_path, "history.json")
    assert [h["method"] for h in history] == ["compute_flatness", "compute_generation"]
    assert history[0] == {"method": "compute_flatness", "args": [], "kwargs": {},
                          "config_hash": project.config_hash}


def test_default_centers_and_scales(tmp_path):
    project = project_for("flatness_line.json", tmp_path,
                          flatness={"centers": None, "scales": None, "delta": None})
    df = project.compute_flatness()
    assert df["index"].nunique() == 8
    assert df["scale"].nunique() == 6
    assert "reifenberg" not in read(tmp_path, "flatness.json")


def test_distortion(tmp_path):
    project = project_for("qs_radial.json", tmp_path, qs={"carleson": True})
    df = project.compute_distortion()
    assert df["scale"].tolist() == [2.0, 1.0]
    doc = read(tmp_path, "qs.json")
    report = doc["reports"][0]
    assert report["index"] == 0
    assert report["n_samples"] == 81
    assert report["H"] >= 1
    assert np.isfinite(report["carleson"])


def test_distortion_needs_a_map(tmp_path):
    project = project_for("flatness_line.json", tmp_path, qs={"map": "line"})
    with raises(BadConfig):
        project.compute_distortion()


def test_unknown_sample(tmp_path):
    project = project_for("flatness_line.json", tmp_path)
    with raises(BadConfig) as info:
        project.load("plane")
    assert "    line\n" in str(info.value)
    with raises(BadConfig):
        project.load(None)


def test_bad_centers_and_scales(tmp_path):
    with raises(BadConfig):
        project_for("flatness_line.json", tmp_path,
                    flatness={"centers": [17]}).compute_flatness()
    with raises(BadConfig):
        project_for("flatness_line.json", tmp_path,
                    flatness={"scales": [0.5, -1.0]}).compute_flatness()


def test_random_extension(tmp_path):
    project = project_for("extend_random.json", tmp_path)
    report = project.compute_extension()

    doc = read(tmp_path, "extension.json")
    assert (doc["n"], doc["N"], doc["family"]) == (1, 2, "random")
    assert doc["eps"] <= 0.01*(1 + 1e-9)
    assert doc["report"]["eps"] == report.eps
    npt.assert_allclose(doc["box"]["corner"], [-2.0])
    assert doc["box"]["side"] == 4.0

    cubes = read(tmp_path, "whitney.jsonl")
    assert len(cubes) == doc["cubes"] > 0
    assert doc["whitney"]["a_gap"] < 1e-12

    queries = read(tmp_path, "points.csv")
    assert len(queries) == 6
    assert set(queries["flag"]) <= {"E", "interior", "collar"}


def test_analytic_extension(tmp_path):
    project = project_for("extend_random.json", tmp_path,
                          extend={"map": "wave", "family": "analytic", "eps": None})
    report = project.compute_extension()
    npt.assert_allclose(read(tmp_path, "extension.json")["eps_nominal"], 0.05)
    assert report.eps <= 0.05*(1 + 1e-9)


def test_extension_config_errors(tmp_path):
    for extend in ({"family": "analytic"},
                   {"eps": 0.7},
                   {"N": 0},
                   {"family": "spline"},
                   {"margin": -1.0}):
        with raises(BadConfig):
            project_for("extend_random.json", tmp_path, extend=extend).compute_extension()


def test_verification(tmp_path):
    project = project_for("verify_sandwich.json", tmp_path)
    assert project.compute_verification()
    doc = read(tmp_path, "verify.json")
    assert (doc["suite"], doc["instances"], doc["passed"]) == ("betas-sandwich", 5, True)
    assert len(read(tmp_path, "verify.csv")) == doc["checks"]

    with raises(BadConfig):
        project_for("flatness_line.json", tmp_path).compute_verification()


def test_generation(tmp_path):
    project = project_for("extend_random.json", tmp_path)
    paths = project.compute_generation()
    assert [os.path.basename(p) for p in paths] == ["segment.json", "wave.json"]
    wave = records.load_sample(paths[1])
    assert (wave.n, wave.N) == (1, 2)
    assert isinstance(read(tmp_path, "segment.json")["points"], list)

    with raises(BadConfig):
        project_for("verify_sandwich.json", tmp_path).compute_generation()


def test_csv_has_full_precision(tmp_path):
    project_for("qs_radial.json", tmp_path).compute_distortion()
    with open(str(tmp_path/"qs.csv")) as f:
        header = f.readline().strip().split(",")
    assert header[-1] == "config_hash"
    table = pd.read_csv(str(tmp_path/"qs.csv"))
    assert table["index"].tolist() == [0, 0]
