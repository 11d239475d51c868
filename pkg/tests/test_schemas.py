import json

import pytest
from pydantic import ValidationError

from plirls.exceptions import ConfigError
from plirls.schemas import FunctionChoice, GenerateSource, RunConfig

GENERATED = {
    "schema_version": 1,
    "problem": "sparse-lsq",
    "instance": {"generate": {"seed": 1, "dims": {"m": 20, "n": 10, "k": 3}}},
    "params": {"lambda": 1.0},
}


def _write(tmp_path, data, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data) if not isinstance(data, str) else data)
    return path


def test_valid_config_and_defaults(tmp_path):
    config = RunConfig.from_file(_write(tmp_path, GENERATED))
    assert config.params.lam == 1.0
    assert config.algorithm.gamma == pytest.approx(1.1)
    assert config.algorithm.diagnostics == "normal"
    assert config.output.trace_csv == "trace.csv"


@pytest.mark.parametrize("change", [
    {"schema_version": 2},
    {"problem": "unknown"},
    {"extra": True},
    {"params": {"lambda": 0.0}},
    {"algorithm": {"gamma": 1.0}},
    {"algorithm": {"nu": 1.5}},
    {"instance": {"generate": {"seed": 1, "dims": {"n": 10}}}},
    {"instance": {"generate": {"seed": 1, "dims": {"m": 5, "n": 10, "k": 11}}}},
    {"instance": {"generate": {"seed": 1, "dims": {"m": 5, "n": 10, "k": 1}}, "files": {"A": "A.txt"}}},
])
def test_invalid_configs_raise_config_error(tmp_path, change):
    with pytest.raises(ConfigError):
        RunConfig.from_file(_write(tmp_path, {**GENERATED, **change}))


def test_malformed_and_missing_files(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.from_file(_write(tmp_path, "{not json"))
    with pytest.raises(ConfigError):
        RunConfig.from_file(tmp_path / "absent.json")


def test_file_paths_resolve_against_config_directory(tmp_path):
    data = {"schema_version": 1, "problem": "lowrank", "instance": {"files": {"D": "data/D.txt"}}}
    config = RunConfig.from_file(_write(tmp_path, data))
    assert config.instance.files.D == tmp_path / "data" / "D.txt"


def test_matrix_kinds_need_rank_or_file(tmp_path):
    data = {"schema_version": 1, "problem": "multiblock",
            "instance": {"generate": {"seed": 0, "dims": {"n": 5}}}}
    with pytest.raises(ConfigError):
        RunConfig.from_file(_write(tmp_path, data))


def test_corruption_needs_noise():
    with pytest.raises(ValidationError):
        GenerateSource(seed=0, dims={"n": 3, "m": 3, "k": 1}, sparsity=0.5, noise=0.0)


@pytest.mark.parametrize("choice", [{"name": "sparsity"}, {"name": "l1-ball"}, {"name": "l0", "lambda": 0.0},
                                    {"name": "box", "lower": 1.0, "upper": 0.0}])
def test_function_choice_needs_its_parameters(choice):
    with pytest.raises(ValidationError):
        FunctionChoice.model_validate(choice)


def test_shipped_demo_configs_validate(demo_config_path):
    config = RunConfig.from_file(demo_config_path)
    assert config.instance.generate is not None


def test_custom_sparsity_level_cannot_exceed_n(tmp_path):
    data = {**GENERATED, "problem": "custom", "params": {"f": {"name": "sparsity", "k": 11}}}
    with pytest.raises(ConfigError, match="exceeds dims.n"):
        RunConfig.from_file(_write(tmp_path, data))
    data["params"]["f"]["k"] = 10
    assert RunConfig.from_file(_write(tmp_path, data)).params.f.k == 10
