import json
from pathlib import Path

import pandas as pd
import pytest
from typer.testing import CliRunner

from pybailout.cli import EXIT_CONFIG, EXIT_PARTIAL, app
from pybailout.storage import load_instance

EXAMPLE1 = str(Path(__file__).resolve().parent.parent / "docs" / "example1.json")

runner = CliRunner()


@pytest.fixture(autouse=True)
def in_tmp_path(tmp_path, monkeypatch):
    # the CLI writes its log file into the working directory
    monkeypatch.chdir(tmp_path)


def test_clear_worked_example():
    result = runner.invoke(app, ["clear", EXAMPLE1])
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["pbar"] == pytest.approx([0.5, 1.0 / 3.0])
    assert report["defaults"] == [0, 1]
    assert report["SoP"] == pytest.approx(5.0 / 6.0)


def test_optimize_worked_example():
    result = runner.invoke(app, ["optimize", EXAMPLE1, "--algorithm", "brute-force"])
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["selected"] == [0]
    assert report["mean"] == pytest.approx(2.5)


@pytest.mark.parametrize("algorithm", ["lp", "rounding", "rounding-dep"])
def test_optimize_absolute_solvency_by_relaxation(algorithm):
    result = runner.invoke(app, ["optimize", EXAMPLE1, "--algorithm", algorithm, "-O", "AS"])
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["z"] == pytest.approx([1.0, 0.0], abs=1e-7)
    assert report["mean"] == pytest.approx(2.0)


def test_sweep_absolute_solvency_with_default_algorithms():
    args = ["sweep-budget", "-i", EXAMPLE1, "-O", "AS", "--k-values", "1", "-w", "1"]
    assert runner.invoke(app, args).exit_code == 0


def test_optimize_unknown_algorithm():
    result = runner.invoke(app, ["optimize", EXAMPLE1, "--algorithm", "simplex"])
    assert result.exit_code == EXIT_CONFIG


def test_missing_instance_file():
    assert runner.invoke(app, ["clear", "nowhere.json"]).exit_code == EXIT_CONFIG


def test_sweep_budget_writes_results(tmp_path):
    output = tmp_path / "results.csv"
    args = ["sweep-budget", "-i", EXAMPLE1, "-a", "greedy,outdegree", "--k-values", "0,1", "-w", "1", "-o", str(output)]
    result = runner.invoke(app, args)
    assert result.exit_code == 0
    frame = pd.read_csv(output)
    assert sorted(frame["algorithm"].unique()) == ["greedy", "lp", "outdegree"]
    assert len(frame) == 6


def test_sweep_without_instance_is_a_config_error():
    result = runner.invoke(app, ["sweep-budget", "-a", "greedy"])
    assert result.exit_code == EXIT_CONFIG


def test_failed_cells_give_partial_exit_code():
    args = ["sweep-budget", "-i", EXAMPLE1, "-a", "lp,greedy", "-O", "SoIP", "--k-values", "1", "-w", "1"]
    result = runner.invoke(app, args)
    assert result.exit_code == EXIT_PARTIAL


def test_sweep_from_yaml_config(tmp_path):
    config = tmp_path / "experiment.yaml"
    config.write_text(f"instance: {EXAMPLE1}\nalgorithms: [greedy]\nk_values: [1]\nworkers: 1\n")
    result = runner.invoke(app, ["sweep-budget", "-c", str(config), "-o", str(tmp_path / "out.csv")])
    assert result.exit_code == 0
    assert pd.read_csv(tmp_path / "out.csv")["mean"].max() == pytest.approx(2.5)


def test_pof_curve_from_generator(tmp_path):
    output = tmp_path / "pof.csv"
    args = ["pof-curve", "-g", "star-pof", "-p", "n=5", "--g-values", "0", "-w", "1", "-o", str(output)]
    result = runner.invoke(app, args)
    assert result.exit_code == 0
    assert pd.read_csv(output)["pof"].iloc[0] == pytest.approx(1.8, rel=1e-6)


def test_gen_instance_round_trip(tmp_path):
    output = tmp_path / "gadget.json"
    result = runner.invoke(app, ["gen-instance", "set-cover-gadget", "-o", str(output), "-p", "alpha=1.5"])
    assert result.exit_code == 0
    instance = load_instance(output)
    assert instance.net.n == 6
    assert instance.provenance.startswith("generator=set-cover-gadget")


def test_gen_instance_bad_parameter(tmp_path):
    result = runner.invoke(app, ["gen-instance", "complete-gap", "-o", str(tmp_path / "x.json"), "-p", "eps=2"])
    assert result.exit_code == EXIT_CONFIG


def test_spectral_on_generated_clique(tmp_path):
    output = tmp_path / "gap.json"
    assert runner.invoke(app, ["gen-instance", "complete-gap", "-o", str(output), "-p", "n=4"]).exit_code == 0
    result = runner.invoke(app, ["spectral", str(output), "--normalization", "cardinality"])
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    # A = (J - I) / 4 on four nodes
    assert report["phi"] == pytest.approx(0.5)
    assert report["cheeger_holds"]
