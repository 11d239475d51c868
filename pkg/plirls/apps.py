"""
Ready-made problem builders and the classical IR baseline.

  sparse-lsq        (lam/2)||Ax - b||^2 + sum_i (x_i^2 + eps^2)^(nu/2)
  l0-regression     lam ||x||_0 + sum_i sqrt((Ax - b)_i^2 + eps^2)
  lowrank           rank(X) + (1/lam) sum_ij sqrt((D_ij - X_ij)^2 + eps^2)
  sparse-l1         delta(x, ||x||_0 <= k) + sum_i sqrt((Ax - b)_i^2 + eps^2)
  cosparse-lsq      delta(x, box) + (lam/2)||Phi x - b||^2 + sum_i (|Psi x|_i^2 + eps^2)^(nu/2)

Every builder returns a ProblemSpec for run_plirls. The low-rank builder flattens X row-major and
uses the exact modulus (2/lam)||Y||_max; the step is always x - grad/c_k.
"""

__copyright__ = "Copyright (c) 2024 Cisco and/or its affiliates."
__license__ = "Cisco Sample Code License, Version 1.1"

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from plirls.config.config import c
from plirls.core.linear_map import LinearMap
from plirls.core.problem import ProblemSpec, ProxFriendlyTerm, RowTerms, SmoothTerm, eval_smoothed_objective
from plirls.core.prox import box_term, l0_term, rank_constraint_term, rank_term, sparsity_term
from plirls.exceptions import InstanceError, NumericalError
from plirls.funcs import as_vector
from plirls.logger.logrr import lm


def _matrix(A, name: str = "A") -> NDArray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise InstanceError(f"{name} must be a matrix, got ndim={A.ndim}")
    return A


def _rhs(A: NDArray, b, name: str = "b") -> NDArray:
    return as_vector(np.asarray(b, dtype=float).ravel(), A.shape[0], name=name)


def _positive(value: float, name: str):
    if not value > 0:
        raise InstanceError(f"{name} must be > 0, got {value}")


def build_sparse_lsq(A, b, lam: float, nu: float = 1.0, epsilon: float = c.DEFAULT_EPSILON) -> ProblemSpec:
    A = _matrix(A)
    b = _rhs(A, b)
    _positive(lam, "lambda")
    n = A.shape[1]
    return ProblemSpec(f=ProxFriendlyTerm.zero(), s=SmoothTerm.least_squares(A, b, lam),
                       terms=RowTerms(LinearMap.identity(n)), epsilon=epsilon, nu=nu)


def _ir_weights(x: NDArray, nu: float, epsilon: float) -> NDArray:
    q = x * x + epsilon ** 2
    if nu == 1.0:
        return 1.0 / (2.0 * np.sqrt(q))
    return (nu / 2.0) * q ** ((nu - 2.0) / 2.0)


def ir_baseline_step(A, b, lam: float, nu: float, epsilon: float, x_k, weights=None) -> NDArray:
    """
    Exact minimization in x of H(x, y^k): solve (lam A^T A + 2 Y^k) x = lam A^T b.
    `weights` overrides Y^k = diag(weight_update(x_k)).
    """
    A = _matrix(A)
    b = _rhs(A, b)
    _positive(lam, "lambda")
    _positive(epsilon, "epsilon")
    x_k = as_vector(x_k, A.shape[1], name="x_k")
    y = _ir_weights(x_k, nu, epsilon) if weights is None else as_vector(weights, A.shape[1], name="weights")
    if np.any(y <= 0):
        raise InstanceError("weights must be strictly positive")
    system = lam * (A.T @ A) + 2.0 * np.diag(y)
    try:
        return scipy.linalg.solve(system, lam * (A.T @ b), assume_a="pos")
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"IR linear system could not be solved: {e}") from e


@dataclass
class IRResult:
    x: NDArray
    objectives: List[float] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.objectives)


def run_ir_baseline(A, b, lam: float, nu: float, epsilon: float, x0=None,
                    max_iters: int = 1000, step_tol: Optional[float] = None) -> IRResult:
    """Iterate ir_baseline_step, tracking the smoothed sparse least-squares objective."""
    spec = build_sparse_lsq(A, b, lam, nu, epsilon)
    x = np.zeros(spec.n) if x0 is None else np.array(as_vector(x0, spec.n, name="x0"), dtype=float)
    step_tol = step_tol if step_tol is not None else c.STOP_TOL_FACTOR * (1.0 + float(np.linalg.norm(x)))
    result = IRResult(x=x)
    for _ in range(max_iters):
        x_new = ir_baseline_step(A, b, lam, nu, epsilon, result.x)
        step = float(np.linalg.norm(x_new - result.x))
        result.x = x_new
        result.objectives.append(eval_smoothed_objective(spec, x_new))
        if step <= step_tol:
            result.converged = True
            break
    lm.logger.info(f"run_ir_baseline: {'converged' if result.converged else 'stopped'} "
                   f"after {result.iterations} iterations")
    return result


def build_l0_regression(A, b, lam: float, epsilon: float = c.DEFAULT_EPSILON) -> ProblemSpec:
    """lam = 0 drops the l0 term and leaves a smooth problem."""
    A = _matrix(A)
    b = _rhs(A, b)
    if lam < 0:
        raise InstanceError(f"lambda must be >= 0, got {lam}")
    f = l0_term(lam) if lam > 0 else ProxFriendlyTerm.zero()
    return ProblemSpec(f=f, s=SmoothTerm.zero(), terms=RowTerms(A, b), epsilon=epsilon)


def build_lowrank(D, lam: float, epsilon: float = c.DEFAULT_EPSILON, rank_limit: Optional[int] = None) -> ProblemSpec:
    """rank(X) penalty, or the constraint rank(X) <= rank_limit when given."""
    D = _matrix(D, "D")
    _positive(lam, "lambda")
    if rank_limit is None:
        f = rank_term(1.0, D.shape)
    else:
        if not 0 <= rank_limit <= min(D.shape):
            raise InstanceError(f"rank_limit must lie in [0, {min(D.shape)}], got {rank_limit}")
        f = rank_constraint_term(rank_limit, D.shape)
    return ProblemSpec(f=f, s=SmoothTerm.zero(), terms=RowTerms(LinearMap.identity(D.size), D.ravel()),
                       epsilon=epsilon, scale=1.0 / lam, modulus="majorizer", shape=D.shape)


def build_sparse_l1_constrained(A, b, k: int, epsilon: float = c.DEFAULT_EPSILON) -> ProblemSpec:
    A = _matrix(A)
    b = _rhs(A, b)
    if not 0 <= k <= A.shape[1]:
        raise InstanceError(f"k must lie in [0, {A.shape[1]}], got {k}")
    return ProblemSpec(f=sparsity_term(k), s=SmoothTerm.zero(), terms=RowTerms(A, b), epsilon=epsilon)


def build_cosparse_lsq(Phi, b, Psi, lam: float, epsilon: float, lower, upper, nu: float = 1.0) -> ProblemSpec:
    Phi = _matrix(Phi, "Phi")
    Psi = _matrix(Psi, "Psi")
    b = _rhs(Phi, b)
    _positive(lam, "lambda")
    if Psi.shape[1] != Phi.shape[1]:
        raise InstanceError(f"Psi has {Psi.shape[1]} columns, Phi has {Phi.shape[1]}")
    return ProblemSpec(f=box_term(lower, upper), s=SmoothTerm.least_squares(Phi, b, lam),
                       terms=RowTerms(Psi), epsilon=epsilon, nu=nu)
