import json
from pathlib import Path

import numpy as np
import pytest
from typer.testing import CliRunner

from plirls.core.solver import Status
from plirls.core.trace import read_trace
from plirls.exceptions import NumericalError
import plirls.main
from plirls.funcs import save_matrix
from plirls.main import app
from plirls.runner import EXIT_CONFIG_ERROR, EXIT_CODES

runner = CliRunner()

CONFIGS_DIR = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture
def toy_config(tmp_path):
    """sparse-lsq on A = I_3 read from files; converges in a few hundred iterations."""
    save_matrix(tmp_path / "A.txt", np.eye(3))
    save_matrix(tmp_path / "b.txt", np.array([1.0, -0.5, 0.25]))

    def write(name="toy.json", **algorithm):
        data = {
            "schema_version": 1,
            "problem": "sparse-lsq",
            "instance": {"files": {"A": "A.txt", "b": "b.txt"}},
            "params": {"lambda": 2.0},
            "algorithm": {"epsilon": 1.0, "tau0": 2.0, **algorithm},
        }
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return path

    return write


def test_solve_converges_and_writes_outputs(toy_config, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(app, ["solve", "--config", str(toy_config()), "--out", str(out)])
    assert result.exit_code == 0, result.output
    summary = json.loads((out / "summary.json").read_text())
    assert summary["status"] == "Converged"
    rows = read_trace(out / "trace.csv")
    assert len(rows) == summary["iterations"]
    objectives = [row["objective"] for row in rows]
    assert all(b <= a + 1e-9 * max(1.0, abs(a)) for a, b in zip(objectives, objectives[1:]))
    assert (out / "x.txt").exists()
    assert len(json.loads((out / "trace.json").read_text())) == len(rows)


def test_max_iters_exit_code(toy_config, tmp_path):
    result = runner.invoke(app, ["solve", "--config", str(toy_config(max_iters=1)), "--out", str(tmp_path / "o")])
    assert result.exit_code == 2
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["status"] == "MaxIters"
    assert summary["iterations"] == 1


def test_exit_code_table():
    assert EXIT_CODES == {Status.CONVERGED: 0, Status.MAX_ITERS: 2, Status.DIVERGED: 3}
    assert EXIT_CONFIG_ERROR == 1


def test_malformed_config_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{ schema_version: 1")
    result = runner.invoke(app, ["solve", "--config", str(bad), "--out", str(tmp_path / "o")])
    assert result.exit_code == 1


def test_batch_with_an_invalid_config(toy_config, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema_version": 1, "problem": "sparse-lsq"}))
    out = tmp_path / "batch"
    result = runner.invoke(app, ["solve", "--config", str(toy_config()), "--config", str(bad), "--out", str(out)])
    assert result.exit_code == 1
    assert (out / "toy" / "summary.json").exists()


def test_batch_exit_code_is_the_worst_status(toy_config, tmp_path):
    out = tmp_path / "batch"
    args = ["solve", "--config", str(toy_config()), "--config", str(toy_config("short.json", max_iters=1)),
            "--out", str(out)]
    result = runner.invoke(app, args)
    assert result.exit_code == 2
    assert json.loads((out / "toy" / "summary.json").read_text())["status"] == "Converged"


def test_identical_runs_write_identical_traces(toy_config, tmp_path):
    config = str(toy_config())
    runner.invoke(app, ["solve", "--config", config, "--out", str(tmp_path / "a")])
    runner.invoke(app, ["solve", "--config", config, "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "trace.csv").read_bytes() == (tmp_path / "b" / "trace.csv").read_bytes()


def test_generate_is_reproducible(tmp_path):
    args = ["generate", "--kind", "sparse-lsq", "--seed", "3", "--m", "8", "--n", "5", "--k", "2"]
    assert runner.invoke(app, args + ["--out", str(tmp_path / "a")]).exit_code == 0
    assert runner.invoke(app, args + ["--out", str(tmp_path / "b")]).exit_code == 0
    for name in ("A.txt", "b.txt", "x_true.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_generate_rejects_bad_parameters(tmp_path):
    assert runner.invoke(app, ["generate", "--kind", "nope", "--out", str(tmp_path)]).exit_code == 1
    result = runner.invoke(app, ["generate", "--kind", "sparse-lsq", "--out", str(tmp_path), "--m", "4", "--n", "3",
                                 "--k", "5"])
    assert result.exit_code == 1


def test_check_quick_passes():
    assert runner.invoke(app, ["check", "--level", "quick"]).exit_code == 0


def test_check_reports_an_injected_fault():
    assert runner.invoke(app, ["check", "--level", "quick", "--gamma", "0.9"]).exit_code == 1


def test_trace_plot(toy_config, tmp_path):
    out = tmp_path / "run"
    runner.invoke(app, ["solve", "--config", str(toy_config(max_iters=3)), "--out", str(out)])
    plot = tmp_path / "plot.dat"
    result = runner.invoke(app, ["trace-plot", "--trace", str(out / "trace.json"), "--out", str(plot)])
    assert result.exit_code == 0
    lines = plot.read_text().splitlines()
    assert lines[0] == "# k objective w_norm"
    assert [line.split()[0] for line in lines[1:]] == ["1", "2", "3"]


def test_trace_plot_missing_file(tmp_path):
    result = runner.invoke(app, ["trace-plot", "--trace", str(tmp_path / "none.csv"), "--out", str(tmp_path / "p")])
    assert result.exit_code == 1


def _flat(output: str) -> str:
    return " ".join(output.split())


def test_sparsity_larger_than_n_is_reported(tmp_path):
    save_matrix(tmp_path / "A.txt", np.eye(3))
    save_matrix(tmp_path / "b.txt", np.ones(3))
    config = tmp_path / "custom.json"
    config.write_text(json.dumps({
        "schema_version": 1,
        "problem": "custom",
        "instance": {"files": {"A": "A.txt", "b": "b.txt"}},
        "params": {"f": {"name": "sparsity", "k": 5}},
        "algorithm": {"max_iters": 5},
    }))
    result = runner.invoke(app, ["solve", "--config", str(config), "--out", str(tmp_path / "o")])
    assert result.exit_code == EXIT_CONFIG_ERROR
    assert result.exception is None or isinstance(result.exception, SystemExit)
    assert "k=5 exceeds n=3" in _flat(result.output)


def test_numerical_failure_inside_a_batch_keeps_the_other_runs(toy_config, tmp_path, monkeypatch):
    execute = plirls.main.execute

    def failing(config, out_dir=None, seed=None):
        if out_dir is not None and out_dir.name == "broken":
            raise NumericalError("SVD failed: did not converge")
        return execute(config, out_dir=out_dir, seed=seed)

    monkeypatch.setattr(plirls.main, "execute", failing)
    out = tmp_path / "batch"
    args = ["solve", "--config", str(toy_config()), "--config", str(toy_config("broken.json")), "--out", str(out)]
    result = runner.invoke(app, args)
    assert result.exit_code == EXIT_CONFIG_ERROR
    assert isinstance(result.exception, SystemExit)
    assert "NumericalError" in _flat(result.output)
    assert json.loads((out / "toy" / "summary.json").read_text())["status"] == "Converged"


def test_solve_shipped_multiblock_demo(tmp_path):
    result = runner.invoke(app, ["solve", "--config", str(CONFIGS_DIR / "multiblock_demo.json"),
                                 "--out", str(tmp_path / "mb")])
    assert result.exit_code in (EXIT_CODES[Status.CONVERGED], EXIT_CODES[Status.MAX_ITERS]), result.output
    summary = json.loads((tmp_path / "mb" / "summary.json").read_text())
    assert summary["problem"] == "multiblock"
    assert {"recovery_error", "recovery_error_sparse"} <= set(summary)
    assert (tmp_path / "mb" / "X.txt").exists()
    assert (tmp_path / "mb" / "Y.txt").exists()
    objectives = [row["objective"] for row in read_trace(tmp_path / "mb" / "trace.csv")]
    assert all(b <= a + 1e-9 * max(1.0, abs(a)) for a, b in zip(objectives, objectives[1:]))
