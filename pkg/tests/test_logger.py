import numpy as np
import pytest

from plirls.config.config import c
from plirls.funcs import save_matrix
from plirls.logger.logrr import lm
from plirls.runner import load_arrays
from plirls.schemas import RunConfig


@pytest.fixture
def console_level(monkeypatch):
    """Pin the console level for one test and re-apply the configured level afterwards."""
    def set_level(level: str):
        monkeypatch.setattr(c, "PLIRLS_LOG_LEVEL", level)
        lm.flush()

    yield set_level
    monkeypatch.undo()
    lm.flush()


def test_logger_records_reach_the_console(console_level, capsys):
    console_level("INFO")
    lm.logger.warning("radius enlarged beyond the start ball")
    lm.flush()
    assert "radius enlarged beyond the start ball" in capsys.readouterr().err


def test_debug_records_stay_below_the_console_level(console_level, capsys):
    console_level("INFO")
    lm.logger.debug("per-iteration detail")
    lm.flush()
    assert "per-iteration detail" not in capsys.readouterr().err


def test_lnp_prints_once(console_level, capsys):
    console_level("INFO")
    lm.lnp("batch finished", style="success")
    lm.flush()
    assert capsys.readouterr().err.count("batch finished") == 1


def test_seed_override_warning_is_shown_for_file_instances(console_level, capsys, tmp_path):
    console_level("INFO")
    save_matrix(tmp_path / "A.txt", np.eye(2))
    save_matrix(tmp_path / "b.txt", np.ones(2))
    config = RunConfig.model_validate({
        "schema_version": 1, "problem": "sparse-lsq",
        "instance": {"files": {"A": str(tmp_path / "A.txt"), "b": str(tmp_path / "b.txt")}},
    })
    load_arrays(config, seed=5)
    lm.flush()
    assert "--seed ignored" in capsys.readouterr().err
