"""
Config-driven runs: load or generate the instance, build the problem, solve, write
trace.csv / trace.json / summary.json and the solution files.
"""

__copyright__ = "Copyright (c) 2024 Cisco and/or its affiliates."
__license__ = "Cisco Sample Code License, Version 1.1"

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from plirls.apps import build_l0_regression, build_lowrank, build_sparse_lsq
from plirls.core.multiblock import DecompositionSpec, MultiblockOptions, run_multiblock
from plirls.core.problem import ProblemSpec, ProxFriendlyTerm, RowTerms, SmoothTerm
from plirls.core.prox import box_term, l0_term, l1_ball_term, l1_term, sparsity_term
from plirls.core.solver import RunResult, SolverOptions, Status, run_plirls
from plirls.core.trace import trace_columns, write_trace_csv, write_trace_json
from plirls.exceptions import InstanceError
from plirls.funcs import load_matrix, load_vector, save_matrix
from plirls.generate import make_instance
from plirls.logger.logrr import lm
from plirls.schemas import MATRIX_KINDS, FunctionChoice, RunConfig

EXIT_CODES = {Status.CONVERGED: 0, Status.MAX_ITERS: 2, Status.DIVERGED: 3}
EXIT_CONFIG_ERROR = 1

# Denominator floor for relative recovery errors
_TINY = 1e-300


@dataclass
class RunOutcome:
    status: Status
    summary: Dict[str, Any]
    out_dir: Path
    files: Dict[str, Path] = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]


def relative_error(estimate, truth) -> float:
    truth = np.asarray(truth, dtype=float)
    return float(np.linalg.norm(np.asarray(estimate, dtype=float) - truth) / max(float(np.linalg.norm(truth)), _TINY))


def load_arrays(config: RunConfig, seed: Optional[int] = None) -> Dict[str, np.ndarray]:
    """Instance arrays by name; `seed` overrides the generator seed of the config."""
    source = config.instance
    if source.generate is not None:
        generate = source.generate
        return make_instance(config.problem, generate.seed if seed is None else seed, generate)
    if seed is not None:
        lm.logger.warning("--seed ignored: the instance is read from files")
    arrays = {}
    for name, path in source.files.model_dump().items():
        if path is None:
            continue
        if name in ("A", "B", "D", "X_true", "S_true"):
            arrays[name] = load_matrix(path)
        else:
            arrays[name] = load_vector(path)
    return arrays


def custom_function(choice: FunctionChoice) -> ProxFriendlyTerm:
    if choice.name == "l1":
        return l1_term(choice.lam)
    if choice.name == "l0":
        return l0_term(choice.lam)
    if choice.name == "sparsity":
        return sparsity_term(choice.k)
    if choice.name == "l1-ball":
        return l1_ball_term(choice.radius)
    if choice.name == "box":
        return box_term(choice.lower, choice.upper)
    return ProxFriendlyTerm.zero()


def build_problem(config: RunConfig, arrays: Dict[str, np.ndarray], epsilon: float) -> ProblemSpec:
    kind, params, algorithm = config.problem, config.params, config.algorithm
    if kind == "sparse-lsq":
        return build_sparse_lsq(arrays["A"], arrays["b"], params.lam, algorithm.nu, epsilon)
    if kind == "l0-regression":
        if algorithm.nu != 1.0:
            raise InstanceError("l0-regression uses nu = 1")
        return build_l0_regression(arrays["A"], arrays["b"], params.lam, epsilon)
    if kind == "lowrank":
        return build_lowrank(arrays["D"], params.lam, epsilon, rank_limit=params.rank_limit)
    # custom
    B = arrays.get("B", arrays.get("A"))
    if params.f.name == "sparsity" and params.f.k > B.shape[1]:
        raise InstanceError(f"f 'sparsity' k={params.f.k} exceeds n={B.shape[1]}")
    offset = arrays.get("c", arrays.get("b") if "B" not in arrays else None)
    s = SmoothTerm.zero()
    if params.s_lambda is not None:
        if "A" not in arrays or "b" not in arrays:
            raise InstanceError("s_lambda needs A and b")
        s = SmoothTerm.least_squares(arrays["A"], arrays["b"], params.s_lambda)
    return ProblemSpec(f=custom_function(params.f), s=s, terms=RowTerms(B, offset), epsilon=epsilon, nu=algorithm.nu)


def solver_options(config: RunConfig) -> SolverOptions:
    a = config.algorithm
    return SolverOptions(gamma=a.gamma, tau0=a.tau0, max_iters=a.max_iters, step_tol=a.step_tol, w_tol=a.w_tol,
                         diagnostics=a.diagnostics)


def continuation_epsilons(config: RunConfig):
    """eps_0 * 2^-j for j = 0..continuation_steps (a single eps without continuation)."""
    eps0 = config.algorithm.epsilon
    return [eps0 * 2.0 ** -j for j in range(config.algorithm.continuation_steps + 1)]


def _solve_vector(config: RunConfig, arrays: Dict[str, np.ndarray], summary: Dict[str, Any]) -> RunResult:
    epsilons = continuation_epsilons(config)
    options = solver_options(config)
    x = None
    result = None
    stage_iterations = []
    for epsilon in epsilons:
        spec = build_problem(config, arrays, epsilon)
        if x is None:
            x = arrays["x0"] if "x0" in arrays else np.zeros(spec.n)
        result = run_plirls(spec, x, options)
        stage_iterations.append(result.iterations)
        x = result.x
        if result.status == Status.DIVERGED:
            break
    if len(epsilons) > 1:
        # harness-level continuation; each stage is a separate single-eps run
        summary["continuation"] = {"epsilons": epsilons[:len(stage_iterations)], "iterations": stage_iterations}
    result.continuation_epsilons = epsilons[:len(stage_iterations)]
    return result


def execute(config: RunConfig, out_dir: Optional[Path] = None, seed: Optional[int] = None) -> RunOutcome:
    """Run one configuration end to end and write its result files."""
    out_dir = Path(out_dir) if out_dir is not None else config.output.dir
    out_dir.mkdir(parents=True, exist_ok=True)
    arrays = load_arrays(config, seed)
    summary: Dict[str, Any] = {"problem": config.problem}
    if config.instance.generate is not None:
        summary["seed"] = config.instance.generate.seed if seed is None else seed
    files: Dict[str, Path] = {}
    verbose = config.algorithm.diagnostics == "verbose"

    if config.problem == "multiblock":
        D = arrays["D"]
        spec = DecompositionSpec.observed(D, epsilon=config.algorithm.epsilon, gamma=config.algorithm.gamma,
                                          nuclear_weight=config.params.nuclear_weight,
                                          l1_weight=config.params.l1_weight)
        a = config.algorithm
        result = run_multiblock(spec, np.zeros_like(D), np.zeros_like(D),
                                MultiblockOptions(max_iters=a.max_iters, step_tol=a.step_tol, w_tol=a.w_tol))
        status, trace, objective = result.status, result.trace, result.state.objective
        files["X"], files["Y"] = out_dir / "X.txt", out_dir / "Y.txt"
        save_matrix(files["X"], result.X)
        save_matrix(files["Y"], result.Y)
        if "X_true" in arrays:
            summary["recovery_error"] = relative_error(result.X, arrays["X_true"])
        if "S_true" in arrays:
            summary["recovery_error_sparse"] = relative_error(result.Y, arrays["S_true"])
    else:
        result = _solve_vector(config, arrays, summary)
        status, trace, objective = result.status, result.trace, result.state.objective
        solution = result.x.reshape(arrays["D"].shape) if config.problem in MATRIX_KINDS else result.x
        files["x"] = out_dir / ("X.txt" if config.problem in MATRIX_KINDS else "x.txt")
        save_matrix(files["x"], solution)
        truth = arrays.get("X_true") if config.problem in MATRIX_KINDS else arrays.get("x_true")
        if truth is not None:
            summary["recovery_error"] = relative_error(solution, truth)

    columns = trace_columns(trace, verbose=verbose and config.problem != "multiblock")
    files["trace_csv"] = out_dir / config.output.trace_csv
    files["trace_json"] = out_dir / config.output.trace_json
    write_trace_csv(files["trace_csv"], trace, columns)
    write_trace_json(files["trace_json"], trace, columns)

    summary.update({
        "status": status.value,
        "iterations": len(trace),
        "final_objective": objective if np.isfinite(objective) else None,
        "final_w_norm": trace[-1].w_norm if trace else None,
    })
    files["summary"] = out_dir / config.output.summary
    files["summary"].write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return RunOutcome(status=status, summary=summary, out_dir=out_dir, files=files)
