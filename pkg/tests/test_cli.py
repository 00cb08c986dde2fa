"""Command-line driver: end-to-end smoke, exit codes, reproducibility."""

import csv
import json

import numpy as np
import pytest

from mlsm.cli import (EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_DATA, EXIT_OK, main)


def _run(argv):
    return main(argv)


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    rc = _run(["simulate", "--n", "40", "--T", "5", "--seed", "11",
               "--out", str(out)])
    assert rc == EXIT_OK
    return out


def test_simulate_outputs(sim_dir):
    assert (sim_dir / "y.mlsm").exists()
    meta = json.loads((sim_dir / "meta.json").read_text())
    assert meta["n"] == 40 and meta["T"] == 5
    assert (sim_dir / "truth_theta.csv").exists()


def test_fit_and_infer_pipeline(sim_dir, tmp_path):
    fit_out = tmp_path / "fit"
    rc = _run(["fit", str(sim_dir / "y.mlsm"), "--out", str(fit_out), "--seed", "11"])
    assert rc == EXIT_OK
    assert (fit_out / "theta.csv").exists()

    inf_out = tmp_path / "inf"
    rc = _run(["infer", str(sim_dir / "y.mlsm"), "--out", str(inf_out),
               "--node", "1", "2", "--core-entry", "1", "1", "1",
               "--estimate-dispersion"])
    assert rc == EXIT_OK
    with (inf_out / "ci_positions.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    # 2 targets x 2 nodes x 2 coords
    assert len(rows) == 8
    for r in rows:
        assert float(r["lower"]) <= float(r["estimate"]) <= float(r["upper"])
    with (inf_out / "ci_core.csv").open() as fh:
        core_rows = list(csv.DictReader(fh))
    assert len(core_rows) == 1


def test_fit_twice_is_bitwise_identical(sim_dir, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert _run(["fit", str(sim_dir / "y.mlsm"), "--out", str(out),
                     "--seed", "11"]) == EXIT_OK
    for name in ("theta.csv", "phi.csv", "core_mode1.csv", "fit.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_changepoints_smoke(sim_dir, tmp_path):
    out = tmp_path / "cp"
    rc = _run(["changepoints", str(sim_dir / "y.mlsm"), "--out", str(out),
               "--alpha", "0.01"])
    assert rc == EXIT_OK
    res = json.loads((out / "changepoints.json").read_text())
    assert "detected_layers" in res
    assert (out / "layer_tests.csv").exists()


def test_scree_smoke(sim_dir, tmp_path):
    out = tmp_path / "scree.csv"
    assert _run(["scree", str(sim_dir / "y.mlsm"), "--out", str(out)]) == EXIT_OK
    with out.open() as fh:
        rows = list(csv.DictReader(fh))
    assert {r["mode"] for r in rows} == {"1", "2"}


def test_exit_code_data_error(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("MLSM1 triples 3 3 2\n9,9,9,1.0\n")
    rc = _run(["fit", str(bad), "--out", str(tmp_path / "o")])
    assert rc == EXIT_DATA


def test_exit_code_config_error(tmp_path):
    rc = _run(["simulate", "--n", "40", "--out", str(tmp_path)])  # missing --T
    assert rc == EXIT_CONFIG
    rc = _run(["fit"])  # missing positional
    assert rc == EXIT_CONFIG


def test_exit_code_convergence_error(sim_dir, tmp_path):
    # rank larger than the data supports
    rc = _run(["fit", str(sim_dir / "y.mlsm"), "--out", str(tmp_path / "o"),
               "--k1", "60", "--k2", "60"])
    assert rc == EXIT_CONVERGENCE


def test_config_file_merge(sim_dir, tmp_path):
    cfgf = tmp_path / "cfg.json"
    cfgf.write_text(json.dumps({"k1": 2, "k2": 2, "seed": 11}))
    out = tmp_path / "o"
    assert _run(["fit", str(sim_dir / "y.mlsm"), "--config", str(cfgf),
                 "--out", str(out)]) == EXIT_OK
    meta = json.loads((out / "fit.json").read_text())
    assert meta["config"]["seed"] == 11


def test_coverage_command_tiny(tmp_path):
    out = tmp_path / "cov.csv"
    rc = _run(["coverage", "--n", "60", "--T", "5", "--reps", "3",
               "--seed", "1", "--out", str(out)])
    assert rc == EXIT_OK
    with out.open() as fh:
        rows = list(csv.DictReader(fh))
    assert [r["target"] for r in rows] == ["theta", "phi", "lambda"]
    for r in rows:
        assert 0.0 <= float(r["coverage"]) <= 1.0
