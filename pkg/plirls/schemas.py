__copyright__ = "Copyright (c) 2024 Cisco and/or its affiliates."
__license__ = "Cisco Sample Code License, Version 1.1"

import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from plirls.config.config import c
from plirls.exceptions import ConfigError

ProblemKind = Literal["sparse-lsq", "l0-regression", "lowrank", "multiblock", "custom"]
VECTOR_KINDS = ("sparse-lsq", "l0-regression", "custom")
MATRIX_KINDS = ("lowrank", "multiblock")


class StrictModel(BaseModel):
    """Unknown keys are rejected everywhere in a run configuration."""
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class Dims(StrictModel):
    m: Optional[int] = Field(default=None, ge=1)    # rows of A / of D
    n: int = Field(..., ge=1)    # unknowns / columns of D
    k: Optional[int] = Field(default=None, ge=0)    # nonzeros of the ground truth
    rank: Optional[int] = Field(default=None, ge=0)    # rank of the low-rank ground truth


class GenerateSource(StrictModel):
    seed: int = Field(..., ge=0, lt=2 ** 64)
    dims: Dims
    sparsity: float = Field(default=0.0, ge=0.0, le=1.0)    # fraction of corrupted measurements
    noise: float = Field(default=1.0, ge=0.0)    # impulse magnitude scale

    @model_validator(mode="after")
    def noise_for_corruption(self) -> 'GenerateSource':
        if self.sparsity > 0 and self.noise == 0:
            raise ValueError("noise must be > 0 when sparsity > 0")
        return self


class FileSource(StrictModel):
    A: Optional[Path] = None
    b: Optional[Path] = None
    x_true: Optional[Path] = None
    B: Optional[Path] = None    # custom residual map (defaults to A)
    c: Optional[Path] = None    # custom residual offsets (defaults to b, or 0 with B)
    D: Optional[Path] = None
    X_true: Optional[Path] = None
    S_true: Optional[Path] = None
    x0: Optional[Path] = None


class InstanceSource(StrictModel):
    generate: Optional[GenerateSource] = None
    files: Optional[FileSource] = None

    @model_validator(mode="after")
    def exactly_one(self) -> 'InstanceSource':
        if (self.generate is None) == (self.files is None):
            raise ValueError("exactly one of 'generate' or 'files' must be given")
        return self


class FunctionChoice(StrictModel):
    """The prox-friendly f of a custom problem."""
    name: Literal["zero", "l1", "l0", "sparsity", "l1-ball", "box"] = "zero"
    lam: float = Field(default=1.0, alias="lambda", ge=0.0)
    k: Optional[int] = Field(default=None, ge=0)
    radius: Optional[float] = Field(default=None, gt=0.0)
    lower: float = float("-inf")
    upper: float = float("inf")

    @model_validator(mode="after")
    def required_parameters(self) -> 'FunctionChoice':
        if self.name == "sparsity" and self.k is None:
            raise ValueError("f 'sparsity' needs k")
        if self.name == "l1-ball" and self.radius is None:
            raise ValueError("f 'l1-ball' needs radius")
        if self.name == "l0" and self.lam <= 0:
            raise ValueError("f 'l0' needs lambda > 0")
        if self.lower > self.upper:
            raise ValueError("box bounds are inverted")
        return self


class ProblemParams(StrictModel):
    lam: float = Field(default=1.0, alias="lambda", ge=0.0)
    rank_limit: Optional[int] = Field(default=None, ge=0)
    nuclear_weight: float = Field(default=1.0, ge=0.0)
    l1_weight: float = Field(default=1.0, ge=0.0)
    f: FunctionChoice = FunctionChoice()
    s_lambda: Optional[float] = Field(default=None, gt=0.0)    # custom: adds (s_lambda/2)||Ax - b||^2


class AlgorithmOptions(StrictModel):
    gamma: float = Field(default=c.DEFAULT_GAMMA, gt=1.0)
    epsilon: float = Field(default=c.DEFAULT_EPSILON, gt=0.0)
    nu: float = Field(default=1.0, gt=0.0, le=1.0)
    step_tol: Optional[float] = Field(default=None, gt=0.0)
    w_tol: Optional[float] = Field(default=None, gt=0.0)
    max_iters: int = Field(default=c.DEFAULT_MAX_ITERS, ge=1)
    tau0: Optional[float] = Field(default=None, gt=0.0)
    diagnostics: Literal["normal", "verbose"] = "normal"
    continuation_steps: int = Field(default=0, ge=0)    # eps-continuation: eps_0 * 2^-j, j = 0..steps


class OutputPaths(StrictModel):
    dir: Path = Path("out")
    trace_csv: str = "trace.csv"
    trace_json: str = "trace.json"
    summary: str = "summary.json"


class RunConfig(StrictModel):
    schema_version: Literal[1]
    problem: ProblemKind
    instance: InstanceSource
    params: ProblemParams = ProblemParams()
    algorithm: AlgorithmOptions = AlgorithmOptions()
    output: OutputPaths = OutputPaths()

    @model_validator(mode="after")
    def consistent_with_problem(self) -> 'RunConfig':
        generate, files = self.instance.generate, self.instance.files
        if self.problem in VECTOR_KINDS:
            if self.problem != "custom" and self.params.lam <= 0:
                raise ValueError(f"{self.problem} needs lambda > 0")
            if generate is not None:
                dims = generate.dims
                if dims.m is None or dims.k is None:
                    raise ValueError(f"{self.problem} instances need dims.m and dims.k")
                if dims.k > dims.n:
                    raise ValueError("dims.k exceeds dims.n")
                if self.problem == "custom" and self.params.f.name == "sparsity" and self.params.f.k > dims.n:
                    raise ValueError(f"f 'sparsity' k={self.params.f.k} exceeds dims.n={dims.n}")
            elif files.A is None and files.B is None:
                raise ValueError(f"{self.problem} needs file A (or B for custom)")
            elif self.problem != "custom" and files.b is None:
                raise ValueError(f"{self.problem} needs files A and b")
        else:
            if self.params.lam <= 0 and self.problem == "lowrank":
                raise ValueError("lowrank needs lambda > 0")
            if generate is not None:
                dims = generate.dims
                if dims.rank is None:
                    raise ValueError(f"{self.problem} instances need dims.rank")
                rows = dims.n if self.problem == "multiblock" else (dims.m or dims.n)
                if dims.rank > min(rows, dims.n):
                    raise ValueError("dims.rank exceeds the matrix dimensions")
            elif files.D is None:
                raise ValueError(f"{self.problem} needs file D")
        return self

    @classmethod
    def from_file(cls, path) -> 'RunConfig':
        """Parse and validate a JSON run configuration; every failure is a ConfigError."""
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as e:
            raise ConfigError(f"{path}: cannot read config: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: malformed JSON: {e}") from e
        try:
            config = cls.model_validate(data)
        except ValidationError as e:
            raise ConfigError(f"{path}: invalid config:\n{e}") from e
        return config.resolve_paths(path.parent)

    def resolve_paths(self, base: Path) -> 'RunConfig':
        """Instance file paths are relative to the config file."""
        files = self.instance.files
        if files is None:
            return self
        resolved = {name: (p if p is None or p.is_absolute() else base / p)
                    for name, p in files.model_dump().items()}
        return self.model_copy(update={"instance": InstanceSource(files=FileSource(**resolved))})
