"""
Invariant suites behind `plirls check`.

Every check draws its instances from seeded generators and reports each failure as a Violation
naming the inequality and the seed, so a failing case can be replayed exactly.
"""

__copyright__ = "Copyright (c) 2024 Cisco and/or its affiliates."
__license__ = "Cisco Sample Code License, Version 1.1"

from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Sequence

import numpy as np

from plirls.apps import build_l0_regression, build_lowrank, build_sparse_l1_constrained, build_sparse_lsq
from plirls.checks.oracles import (
    fd_gradient,
    prox_l0_exhaustive,
    project_sparsity_exhaustive,
    rank_prox_exhaustive,
    reference_prox_gradient,
)
from plirls.config.config import c
from plirls.core.multiblock import DecompositionSpec, initial_block_state, multiblock_step
from plirls.core.problem import (
    ProblemSpec,
    RowTerms,
    SmoothTerm,
    eval_auxiliary,
    eval_smoothed_objective,
    grad_h,
    smooth_part,
)
from plirls.core.prox import hard_threshold_l0, l1_term, project_sparsity, rank_prox
from plirls.core.solver import (
    DivergenceDetected,
    SolverOptions,
    Status,
    StepRule,
    current_modulus,
    grad_H_x,
    initial_state,
    plirls_step,
    run_plirls,
    weight_update,
    weights_in_box,
)
from plirls.core.trace import trace_to_csv_text
from plirls.logger.logrr import lm

Level = Literal["quick", "full"]

DECREASE = "F(x^k) - F(x^{k+1}) >= (gamma-1)/2 * L(tau, y^k) * ||x^{k+1} - x^k||^2, (gamma-1)/2 * L > 0"
SUBGRADIENT = "||w^{k+1}|| <= rho2 * ||x^{k+1} - x^k||"
AUXILIARY = "|Psi(x^k, y^k) - F_eps(x^k)| <= 1e-12 * (1 + |F_eps(x^k)|)"
WEIGHT_BOX = "y^k in (0, nu / (2 eps^(2-nu))]"
GRADIENT = "||grad_h - fd_gradient|| <= 1e-6 * max(1, ||grad_h||)"
COUPLING_GRADIENT = "||grad_H_x(., y) - fd_gradient(H(., y))|| <= 1e-6 * max(1, ||grad_H_x||)"
WEIGHTED_GRADIENT = "||grad_H_x(x, weight_update(x)) - grad_h(x)|| <= 1e-12 * max(1, ||grad_h||)"
CONVERGENCE_RATE = "at least 95% of well-conditioned instances reach Converged"
PROX = "prox equals the exhaustive minimizer"
MULTIBLOCK_DECREASE = "multiblock objective nonincreasing"
Z_FORMULA = "z_i = 1 / (2 sqrt(r_i^2 + eps^2)) after every sweep"
REPRODUCIBLE = "identical seed gives identical trace bytes"
CONVEX_REFERENCE = "F_eps(x_plirls) - F_eps(x_reference) <= 1e-4"

CONVERGED_FRACTION = 0.95
REFERENCE_ITERATIONS = 1_000_000
REFERENCE_TOL = 1e-13


@dataclass(frozen=True)
class Violation:
    check: str
    inequality: str
    seed: int
    iteration: Optional[int] = None
    detail: str = ""

    def as_row(self) -> Dict[str, str]:
        return {"check": self.check, "inequality": self.inequality, "seed": str(self.seed),
                "iteration": "" if self.iteration is None else str(self.iteration), "detail": self.detail}


@dataclass
class CheckReport:
    level: str
    checks_run: List[str] = field(default_factory=list)
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class SuiteSizes:
    instances: int
    iterations: int
    prox_trials: int
    multiblock_instances: int
    multiblock_side: int
    nus: Sequence[float]
    convex_instances: int
    convergence_instances: int


SIZES: Dict[str, SuiteSizes] = {
    "quick": SuiteSizes(instances=3, iterations=60, prox_trials=50, multiblock_instances=3, multiblock_side=5,
                        nus=(1.0,), convex_instances=0, convergence_instances=3),
    "full": SuiteSizes(instances=100, iterations=300, prox_trials=1000, multiblock_instances=50, multiblock_side=10,
                       nus=(1.0, 0.5, 0.25), convex_instances=20, convergence_instances=40),
}


def _slack(value: float) -> float:
    return c.INVARIANT_SLACK * max(1.0, abs(value))


def random_instance(kind: str, seed: int, nu: float = 1.0, epsilon: float = 0.1) -> ProblemSpec:
    """Small random instance of an application kind (n, m <= 12)."""
    rng = np.random.default_rng(seed)
    if kind == "lowrank":
        D = np.outer(rng.standard_normal(4), rng.standard_normal(4))
        D[rng.integers(4), rng.integers(4)] += 3.0
        return build_lowrank(D, lam=1.0, epsilon=epsilon)
    m, n = int(rng.integers(4, 13)), int(rng.integers(3, 11))
    A = rng.standard_normal((m, n)) / np.sqrt(m)
    b = rng.standard_normal(m)
    if kind == "sparse-lsq":
        return build_sparse_lsq(A, b, lam=float(rng.uniform(0.5, 5.0)), nu=nu, epsilon=epsilon)
    if kind == "l0-regression":
        return build_l0_regression(A, b, lam=float(rng.uniform(0.01, 0.5)), epsilon=epsilon)
    if kind == "sparse-l1":
        return build_sparse_l1_constrained(A, b, k=int(rng.integers(1, n + 1)), epsilon=epsilon)
    raise ValueError(f"unknown instance kind {kind!r}")


def check_run_invariants(spec: ProblemSpec, x0, seed: int, gamma: float, iterations: int,
                         name: str) -> List[Violation]:
    """Step a run by hand and test decrease, subgradient bound, auxiliary identity and weight box."""
    violations: List[Violation] = []
    state = initial_state(spec, x0)
    rule = StepRule.for_spec(spec, gamma, c.TAU_INITIAL_FACTOR * max(1.0, float(np.linalg.norm(state.x))))
    for _ in range(iterations):
        modulus = current_modulus(spec, rule, state.y)
        try:
            new_state, record = plirls_step(spec, state, rule)
        except DivergenceDetected:
            break
        k = record.k
        rho1 = 0.5 * (gamma - 1.0) * modulus
        if record.rho1_witness < -_slack(state.objective) or (rho1 <= 0 and record.step_norm > 0):
            violations.append(Violation(name, DECREASE, seed, k, f"witness={record.rho1_witness:.3e}, rho1={rho1:.3e}"))
        if spec.nu == 1.0 and record.rho2_witness < -_slack(record.w_norm):
            violations.append(Violation(name, SUBGRADIENT, seed, k, f"witness={record.rho2_witness:.3e}"))
        psi = eval_auxiliary(spec, new_state.x, new_state.y)
        if abs(psi - new_state.objective) > 1e-12 * (1.0 + abs(new_state.objective)):
            violations.append(Violation(name, AUXILIARY, seed, k, f"Psi={psi!r}, F={new_state.objective!r}"))
        if not weights_in_box(spec, new_state.y):
            violations.append(Violation(name, WEIGHT_BOX, seed, k, f"max y={new_state.y.norm_inf:.6g}"))
        state = new_state
        if record.step_norm == 0.0 and record.w_norm == 0.0:
            break
    return violations


def check_solver(sizes: SuiteSizes, base_seed: int, gamma: float) -> List[Violation]:
    violations = []
    for i in range(sizes.instances):
        seed = base_seed + i
        for kind in ("sparse-lsq", "l0-regression", "sparse-l1", "lowrank"):
            nus = sizes.nus if kind == "sparse-lsq" else (1.0,)
            for nu in nus:
                spec = random_instance(kind, seed, nu=nu)
                x0 = np.random.default_rng(seed).standard_normal(spec.n)
                violations += check_run_invariants(spec, x0, seed, gamma, sizes.iterations, f"solver/{kind}/nu={nu}")
    return violations


def check_gradients(sizes: SuiteSizes, base_seed: int) -> List[Violation]:
    violations = []
    for i in range(sizes.instances):
        seed = base_seed + i
        for nu in sizes.nus:
            spec = random_instance("sparse-lsq", seed, nu=nu)
            x = np.random.default_rng(seed + 1).standard_normal(spec.n)
            analytic = grad_h(spec, x)
            numeric = fd_gradient(lambda z: smooth_part(spec, z), x)
            error = float(np.linalg.norm(analytic - numeric))
            if error > 1e-6 * max(1.0, float(np.linalg.norm(analytic))):
                violations.append(Violation(f"gradient/nu={nu}", GRADIENT, seed, None, f"error={error:.3e}"))

            # H(., y) at frozen weights taken from an unrelated point
            y = weight_update(spec, np.random.default_rng(seed + 2).standard_normal(spec.n))
            coupling = grad_H_x(spec, x, y)
            numeric = fd_gradient(lambda z: eval_auxiliary(spec, z, y) - spec.f.value(z), x)
            error = float(np.linalg.norm(coupling - numeric))
            if error > 1e-6 * max(1.0, float(np.linalg.norm(coupling))):
                violations.append(Violation(f"gradient/H/nu={nu}", COUPLING_GRADIENT, seed, None,
                                            f"error={error:.3e}"))

            error = float(np.linalg.norm(grad_H_x(spec, x, weight_update(spec, x)) - analytic))
            if error > 1e-12 * max(1.0, float(np.linalg.norm(analytic))):
                violations.append(Violation(f"gradient/weights/nu={nu}", WEIGHTED_GRADIENT, seed, None,
                                            f"error={error:.3e}"))
    return violations


def well_conditioned_instance(seed: int) -> ProblemSpec:
    """sparse-lsq with nu = 1, A of full column rank (m = 2n) and moderate smoothing."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    A = rng.standard_normal((2 * n, n)) / np.sqrt(2 * n)
    b = rng.standard_normal(2 * n)
    return build_sparse_lsq(A, b, lam=float(rng.uniform(0.5, 2.0)), epsilon=0.5)


def check_convergence_rate(sizes: SuiteSizes, base_seed: int, max_iters: int = c.DEFAULT_MAX_ITERS) -> List[Violation]:
    """Run well-conditioned instances from zero; Converged must be reached by at least CONVERGED_FRACTION."""
    if not sizes.convergence_instances:
        return []
    stalled = []
    for i in range(sizes.convergence_instances):
        seed = base_seed + i
        spec = well_conditioned_instance(seed)
        result = run_plirls(spec, np.zeros(spec.n), SolverOptions(max_iters=max_iters))
        if result.status != Status.CONVERGED:
            lm.logger.warning(f"convergence rate: seed {seed} ended {result.status.value}")
            stalled.append(seed)
    fraction = 1.0 - len(stalled) / sizes.convergence_instances
    if fraction >= CONVERGED_FRACTION:
        return []
    return [Violation("convergence-rate", CONVERGENCE_RATE, base_seed, None,
                      f"converged {fraction:.0%}; stalled seeds {stalled}")]


def check_prox(sizes: SuiteSizes, base_seed: int) -> List[Violation]:
    violations = []
    rng = np.random.default_rng(base_seed)
    for trial in range(sizes.prox_trials):
        n = int(rng.integers(1, 7))
        u = rng.standard_normal(n) * 2.0
        lam, modulus = float(rng.uniform(0.05, 2.0)), float(rng.uniform(0.5, 4.0))
        k = int(rng.integers(0, n + 1))
        M = rng.standard_normal((int(rng.integers(1, 5)), int(rng.integers(1, 5))))
        pairs = [
            ("hard_threshold_l0", hard_threshold_l0(u, lam, modulus).point, prox_l0_exhaustive(u, lam, modulus)),
            ("project_sparsity", project_sparsity(u, k).point, project_sparsity_exhaustive(u, k)),
            ("rank_prox", rank_prox(M, lam, modulus).point, rank_prox_exhaustive(M, lam, modulus)),
        ]
        for name, got, expected in pairs:
            if not np.allclose(got, expected, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(expected).max(initial=0)))):
                violations.append(Violation(f"prox/{name}", PROX, base_seed, trial, "mismatch"))
    return violations


def check_multiblock(sizes: SuiteSizes, base_seed: int) -> List[Violation]:
    violations = []
    side = sizes.multiblock_side
    for i in range(sizes.multiblock_instances):
        seed = base_seed + i
        rng = np.random.default_rng(seed)
        D = np.outer(rng.standard_normal(side), rng.standard_normal(side))
        mask = rng.random((side, side)) < 0.1
        D[mask] += rng.uniform(1.0, 2.0, int(mask.sum())) * rng.choice([-1.0, 1.0], int(mask.sum()))
        spec = DecompositionSpec.observed(D, epsilon=0.1, nuclear_weight=1.0, l1_weight=1.0 / np.sqrt(side))
        state = initial_block_state(spec, np.zeros_like(D), np.zeros_like(D))
        for _ in range(sizes.iterations):
            new_state, record = multiblock_step(spec, state)
            if new_state.objective > state.objective + _slack(state.objective):
                violations.append(Violation("multiblock", MULTIBLOCK_DECREASE, seed, record.k,
                                            f"{state.objective!r} -> {new_state.objective!r}"))
            r = (new_state.X + new_state.Y).ravel() - spec.b
            expected = 1.0 / (2.0 * np.sqrt(r * r + spec.epsilon ** 2))
            if np.max(np.abs(new_state.z.weights - expected)) > 1e-12 * max(1.0, float(expected.max())):
                violations.append(Violation("multiblock", Z_FORMULA, seed, record.k))
            state = new_state
    return violations


def check_reproducible(base_seed: int) -> List[Violation]:
    spec_a = random_instance("l0-regression", base_seed)
    spec_b = random_instance("l0-regression", base_seed)
    x0 = np.zeros(spec_a.n)
    options = SolverOptions(max_iters=50)
    first = trace_to_csv_text(run_plirls(spec_a, x0, options).trace)
    second = trace_to_csv_text(run_plirls(spec_b, x0, options).trace)
    return [] if first == second else [Violation("reproducibility", REPRODUCIBLE, base_seed)]


def check_convex_reference(sizes: SuiteSizes, base_seed: int,
                           reference_iterations: int = REFERENCE_ITERATIONS,
                           options: Optional[SolverOptions] = None) -> List[Violation]:
    """f = lam ||.||_1 with nu = 1: compare against a long plain proximal-gradient run. A PL-IRLS run that
    does not converge is itself a violation."""
    violations = []
    for i in range(sizes.convex_instances):
        seed = base_seed + i
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 5))
        A = rng.standard_normal((2 * n, n)) / np.sqrt(2 * n)
        b = rng.standard_normal(2 * n)
        spec = ProblemSpec(f=l1_term(0.1), s=SmoothTerm.zero(), terms=RowTerms(A, b), epsilon=0.5)
        result = run_plirls(spec, np.zeros(n), options or SolverOptions())
        if result.status != Status.CONVERGED:
            violations.append(Violation("convex-reference", CONVEX_REFERENCE, seed, result.iterations,
                                        f"run ended {result.status.value}"))
            continue
        reference = reference_prox_gradient(spec, np.zeros(n), iterations=reference_iterations, tol=REFERENCE_TOL)
        gap = eval_smoothed_objective(spec, result.x) - eval_smoothed_objective(spec, reference)
        if gap > 1e-4:
            violations.append(Violation("convex-reference", CONVEX_REFERENCE, seed, result.iterations,
                                        f"gap={gap:.3e}"))
    return violations


def run_checks(level: Level = "quick", base_seed: int = 0, gamma: Optional[float] = None) -> CheckReport:
    """
    Run the suite at the given depth. `gamma` replaces the solver's gamma inside the invariant
    checks only (values <= 1 break the decrease guarantee and must be reported).
    """
    if level not in SIZES:
        raise ValueError(f"unknown check level {level!r}")
    sizes = SIZES[level]
    gamma = c.DEFAULT_GAMMA if gamma is None else gamma
    report = CheckReport(level=level)
    checks: List[tuple] = [
        ("solver invariants", lambda: check_solver(sizes, base_seed, gamma)),
        ("gradients", lambda: check_gradients(sizes, base_seed)),
        ("prox oracles", lambda: check_prox(sizes, base_seed)),
        ("multiblock", lambda: check_multiblock(sizes, base_seed)),
        ("reproducibility", lambda: check_reproducible(base_seed)),
        ("convergence rate", lambda: check_convergence_rate(sizes, base_seed)),
    ]
    if sizes.convex_instances:
        checks.append(("convex reference", lambda: check_convex_reference(sizes, base_seed)))
    for name, run in checks:
        found = run()
        report.checks_run.append(name)
        report.violations.extend(found)
        lm.logger.info(f"check {name}: {len(found)} violation(s)")
    return report
