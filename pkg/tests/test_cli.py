import json

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner

from app import create_app

SMALL_STUDY = [
    "--problem.N", "16",
    "--study.T", "0.05",
    "--study.ell", "1,2",
    "--study.h", "0.025,0.0125",
    "--study.h_ref", "0.0025",
]


@pytest.fixture
def run(tmp_path):
    runner = CliRunner()
    app = create_app()

    def invoke(*args):
        return runner.invoke(app, list(args) + ["--output.dir", str(tmp_path)])

    return invoke


def _header(path):
    return path.read_text(encoding = "utf-8").splitlines()[0]


def test_all_commands_are_registered():
    assert {"check-tableau", "integrate", "project", "study", "bounds"} <= set(create_app().commands)


def test_check_tableau_passes_for_gauss2():
    result = CliRunner().invoke(create_app(), ["check-tableau", "--name", "gauss2"])

    assert result.exit_code == 0, result.output
    assert "RK1: pass" in result.output
    assert "RK2: pass" in result.output


def test_check_tableau_json_report():
    result = CliRunner().invoke(create_app(), ["check-tableau", "--tableau.name", "gauss3", "--json"])

    report = json.loads(result.stdout)
    assert report["passed"] is True
    assert report["s"] == 3


def test_explicit_euler_fails_with_code_1():
    result = CliRunner().invoke(create_app(), [
        "check-tableau", "--tableau.name", "inline", "--tableau.a", "0", "--tableau.b", "1", "--tableau.p", "1",
    ])
    assert result.exit_code == 1
    assert "alpha singular" in result.output


def test_unknown_tableau_name_is_a_config_error():
    result = CliRunner().invoke(create_app(), ["check-tableau", "--tableau.name", "radau5"])
    assert result.exit_code == 2


def test_invalid_grid_size_is_a_config_error(run):
    result = run("integrate", "--problem.N", "7")

    assert result.exit_code == 2
    assert "problem.N" in result.output


def test_integrate_writes_a_trajectory(run, tmp_path):
    result = run("integrate", "--problem.N", "32", "--integrate.steps", "4", "--integrate.ell", "1",
                 "--integrate.dump_coefficients", "true")
    assert result.exit_code == 0, result.output

    csv_path = tmp_path / "rkscale_trajectory.csv"
    assert _header(csv_path).startswith("# rkscale 0.1.0 config-sha256=")
    frame = pd.read_csv(csv_path, comment = "#")
    assert list(frame.columns) == ["step", "t", "y_norm", "solver_iters"]
    assert list(frame["step"]) == [0, 1, 2, 3, 4]
    assert frame["solver_iters"].iloc[0] == 0

    dump = np.load(tmp_path / "rkscale_coefficients.npz")
    assert dump["coefficients"].shape == (5, 2, 32)


def test_study_writes_csv_json_and_plot_data(run, tmp_path):
    result = run("study", *SMALL_STUDY)
    assert result.exit_code == 0, result.output

    csv_path = tmp_path / "rkscale_study.csv"
    frame = pd.read_csv(csv_path, comment = "#")
    assert list(frame.columns) == [
        "ell", "h", "n_steps", "err_max", "err_final", "q_est", "q_pred", "fit_residual", "solver_iters_mean",
    ]
    assert len(frame) == 4
    assert frame["n_steps"].tolist() == [4, 2, 4, 2]

    document = json.loads((tmp_path / "rkscale_study.json").read_text(encoding = "utf-8"))
    assert _header(csv_path).endswith(document["config_sha256"])
    assert document["completed"] is True
    assert document["config"]["problem.N"] == "16"
    assert "errors" not in document["rows"][0]

    plot = (tmp_path / "rkscale_plot.dat").read_text(encoding = "utf-8")
    assert "# series: q_est" in plot and "# series: q_pred" in plot


def test_study_output_is_reproducible(run, tmp_path):
    run("study", *SMALL_STUDY, "--output.json", "false", "--output.plot_data", "false")
    first = (tmp_path / "rkscale_study.csv").read_text(encoding = "utf-8")
    run("study", *SMALL_STUDY, "--output.json", "false", "--output.plot_data", "false")

    assert (tmp_path / "rkscale_study.csv").read_text(encoding = "utf-8") == first
    assert not (tmp_path / "rkscale_study.json").exists()


def test_study_with_failing_solver_exits_1(run, tmp_path):
    result = run("study", *SMALL_STUDY, "--solver.max_iter", "1")

    assert result.exit_code == 1
    assert "# failed" in (tmp_path / "rkscale_study.csv").read_text(encoding = "utf-8")


def test_bounds_hold_for_the_wave_operator(run, tmp_path):
    result = run("bounds", "--problem.N", "16")
    assert result.exit_code == 0, result.output

    document = json.loads((tmp_path / "rkscale_bounds.json").read_text(encoding = "utf-8"))
    assert document["omega"] == 0.0
    assert len(document["semigroup"]) == 12
    assert all(entry["ok"] for entry in document["resolvent"])


def test_project_writes_slopes(run, tmp_path):
    result = run("project", "--problem.N", "32", "--galerkin.m", "2,4,8", "--galerkin.T", "0.05",
                 "--galerkin.h_ref", "0.01")
    assert result.exit_code == 0, result.output

    document = json.loads((tmp_path / "rkscale_projection.json").read_text(encoding = "utf-8"))
    assert [report["kind"] for report in document["reports"]] == ["flow", "method"]
    assert len(document["reports"][0]["final_errors"]) == 3
    assert document["reports"][1]["final_errors"] is None
    assert "final=" in result.output


def test_config_file_and_dump(run, tmp_path):
    config = tmp_path / "run.cfg"
    config.write_text("problem.N=32\nintegrate.steps=2\n", encoding = "utf-8")
    dumped = tmp_path / "effective.cfg"

    result = run("integrate", "--config", str(config), "--dump-config", str(dumped))

    assert result.exit_code == 0, result.output
    assert "problem.N=32" in dumped.read_text(encoding = "utf-8").splitlines()


def test_config_file_from_the_environment(tmp_path):
    config = tmp_path / "env.cfg"
    config.write_text("problem.N=7\n", encoding = "utf-8")

    result = CliRunner().invoke(create_app(), ["integrate"], env = {"RKSCALE_CONFIG": str(config)})

    assert result.exit_code == 2


def test_zero_steps_write_only_the_initial_state(run, tmp_path):
    result = run("integrate", "--problem.N", "16", "--integrate.steps", "0")
    assert result.exit_code == 0, result.output

    frame = pd.read_csv(tmp_path / "rkscale_trajectory.csv", comment = "#")
    assert frame["step"].tolist() == [0]


@pytest.mark.parametrize("args", [
    ["study", "--study.h", ""],
    ["bounds", "--bounds.epsilon", "0.5,1.5"],
    ["study", "--study.colour", "blue"],
])
def test_config_is_rejected_before_any_compute(run, tmp_path, args):
    result = run(*args)

    assert result.exit_code == 2
    assert not any(tmp_path.iterdir())
