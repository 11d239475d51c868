"""
The PL-IRLS iteration

    c_k     = gamma * L(tau, y^k)
    x^{k+1} in prox_{c_k}^f( x^k - (1/c_k) grad_x H(x^k, y^k) )
    y^{k+1}_i = (nu/2) (||B_i x^{k+1} - c_i||^2 + eps^2)^((nu-2)/2)

with per-iteration diagnostics (sufficient decrease and subgradient-bound witnesses).
"""

__copyright__ = "Copyright (c) 2024 Cisco and/or its affiliates."
__license__ = "Cisco Sample Code License, Version 1.1"

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Literal, Optional

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field

from plirls.config.config import c
from plirls.core.problem import (
    AffineTerm,
    ProblemSpec,
    eval_smoothed_objective,
    in_weight_box,
)
from plirls.exceptions import InstanceError, PlirlsError, SolverError
from plirls.funcs import as_vector, ensure_finite
from plirls.logger.logrr import lm


class Status(str, Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"
    DIVERGED = "Diverged"


class DivergenceDetected(PlirlsError):
    """The trust radius tau was enlarged more often than allowed."""


@dataclass(frozen=True, eq=False)
class WeightVector:
    weights: NDArray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        if np.any(~(w > 0)):
            raise InstanceError("weights must be strictly positive")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def norm_inf(self) -> float:
        return float(self.weights.max()) if self.weights.size else 0.0

    def __len__(self):
        return self.weights.size


@dataclass
class StepRule:
    """gamma, the trust radius tau and the Lipschitz profile (L_1^tau, ..., L_m^tau) at that radius."""
    gamma: float
    tau: float
    lipschitz_profile: NDArray
    doublings: int = 0

    @classmethod
    def for_spec(cls, spec: ProblemSpec, gamma: float, tau: float) -> 'StepRule':
        return cls(gamma=gamma, tau=tau, lipschitz_profile=lipschitz_profile(spec, tau))

    def enlarge(self, spec: ProblemSpec, norm_x: float):
        self.tau = 2.0 * norm_x
        self.lipschitz_profile = lipschitz_profile(spec, self.tau)
        self.doublings += 1


@dataclass(frozen=True, eq=False)
class SolverState:
    """Iterate x^k, weights y^k = weight_update(x^k), the cached grad_x H(x^k, y^k) and F_eps(x^k)."""
    x: NDArray
    y: WeightVector
    grad_H: NDArray
    objective: float
    c_prev: Optional[float] = None
    k: int = 0


@dataclass(frozen=True)
class IterationRecord:
    k: int
    objective: float
    step_norm: float
    w_norm: float
    c_k: float
    rho1_witness: float
    rho2_witness: Optional[float]
    w_norm_stated: Optional[float] = None
    step_norm_X: Optional[float] = None
    step_norm_Y: Optional[float] = None


class SolverOptions(BaseModel):
    """Options of run_plirls; None tolerances default to STOP_TOL_FACTOR * (1 + ||x0||)."""
    model_config = ConfigDict(extra="forbid")

    gamma: float = Field(default=c.DEFAULT_GAMMA, gt=1.0)
    tau0: Optional[float] = Field(default=None, gt=0.0)
    max_iters: int = Field(default=c.DEFAULT_MAX_ITERS, ge=1)
    step_tol: Optional[float] = Field(default=None, gt=0.0)
    w_tol: Optional[float] = Field(default=None, gt=0.0)
    tau_doubling_cap: int = Field(default=c.TAU_DOUBLING_CAP, ge=0)
    diagnostics: Literal["normal", "verbose"] = "normal"


@dataclass
class RunResult:
    x: NDArray
    trace: List[IterationRecord]
    status: Status
    state: SolverState
    rule: StepRule
    step_tol: float = 0.0
    w_tol: float = 0.0
    continuation_epsilons: List[float] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.trace)


def local_lipschitz_bound(term: AffineTerm, epsilon: float, tau: float) -> float:
    """L_i^tau = (||B|| ||c|| + ||B^T B|| (2 tau ||B|| + ||c|| + eps)) / eps^2."""
    if epsilon <= 0 or tau <= 0:
        raise InstanceError("epsilon and tau must be positive")
    b, g, cn = term.map.operator_norm, term.map.gram_norm, term.offset_norm
    return (b * cn + g * (2.0 * tau * b + cn + epsilon)) / epsilon ** 2


def lipschitz_profile(spec: ProblemSpec, tau: float) -> NDArray:
    """local_lipschitz_bound for every term at once."""
    terms, eps = spec.terms, spec.epsilon
    b, g, cn = terms.operator_norms, terms.gram_norms, terms.offset_norms
    return (b * cn + g * (2.0 * tau * b + cn + eps)) / eps ** 2


def step_modulus(L_s: float, lipschitz_profile: NDArray, y) -> float:
    """L(tau, y) = L_s + ||L_p^tau||_1 * ||y||_inf."""
    weights = np.asarray(getattr(y, "weights", y), dtype=float)
    profile = np.asarray(lipschitz_profile, dtype=float)
    if np.any(profile < 0):
        raise InstanceError("Lipschitz profile entries must be nonnegative")
    y_inf = float(np.abs(weights).max()) if weights.size else 0.0
    return float(L_s + profile.sum() * y_inf)


def current_modulus(spec: ProblemSpec, rule: StepRule, y: WeightVector) -> float:
    """L(.) for the problem's modulus family; c_k = gamma * current_modulus."""
    if spec.modulus == "majorizer":
        return float(spec.s.lipschitz_modulus + 2.0 * spec.scale * y.norm_inf * spec.terms.stacked_gram_norm)
    return step_modulus(spec.s.lipschitz_modulus, spec.scale * rule.lipschitz_profile, y)


def subgradient_bound(spec: ProblemSpec, rule: StepRule, c_k: float) -> float:
    """rho_2 with ||w^{k+1}|| <= rho_2 ||x^{k+1} - x^k||."""
    L_s = spec.s.lipschitz_modulus
    if spec.modulus == "majorizer":
        return float(L_s + 2.0 * spec.scale * spec.weight_cap * spec.terms.stacked_gram_norm + c_k)
    profile_l1 = spec.scale * float(rule.lipschitz_profile.sum())
    return float((rule.gamma + 1.0) * L_s + (rule.gamma * spec.weight_cap + 1.0) * profile_l1)


def weight_update(spec: ProblemSpec, x) -> WeightVector:
    x = as_vector(x, spec.n)
    q = spec.terms.norms_of(spec.terms.residual(x)) ** 2 + spec.epsilon ** 2
    if spec.nu == 1.0:
        return WeightVector(1.0 / (2.0 * np.sqrt(q)))
    return WeightVector((spec.nu / 2.0) * q ** ((spec.nu - 2.0) / 2.0))


def grad_H_x(spec: ProblemSpec, x, y) -> NDArray:
    """grad_x H(x, y) = grad s(x) + scale * sum_i 2 y_i B_i^T (B_i x - c_i)."""
    x = as_vector(x, spec.n)
    weights = as_vector(getattr(y, "weights", y), spec.m, name="y")
    grad = np.asarray(spec.s.gradient(x), dtype=float)
    if spec.m == 0:
        return grad
    return grad + spec.scale * spec.terms.weighted_adjoint(spec.terms.residual(x), 2.0 * weights)


def initial_state(spec: ProblemSpec, x0) -> SolverState:
    x0 = np.array(as_vector(x0, spec.n, name="x0"), dtype=float)
    y0 = weight_update(spec, x0)
    grad0 = ensure_finite(grad_H_x(spec, x0, y0), "gradient", 0)
    objective = eval_smoothed_objective(spec, x0)
    if np.isnan(objective):
        raise SolverError("nonfinite value encountered", iteration=0, quantity="objective")
    return SolverState(x=x0, y=y0, grad_H=grad0, objective=objective)


def plirls_step(spec: ProblemSpec, state: SolverState, rule: StepRule,
                tau_doubling_cap: int = c.TAU_DOUBLING_CAP, verbose: bool = False):
    """
    One PL-IRLS iteration from x^k. Enlarges `rule.tau` in place (tau <- 2||x^{k+1}||, profile
    recomputed, step redone) whenever the new iterate leaves the ball B(tau).

    Returns (new state, record of x^{k+1}).
    """
    k = state.k + 1
    while True:
        modulus = current_modulus(spec, rule, state.y)
        c_k = rule.gamma * modulus
        ensure_finite(c_k, "step modulus", k)
        if c_k <= 0:
            raise SolverError("step modulus vanished; the instance has no smooth part", iteration=k,
                              quantity="step modulus")
        forward = state.x - state.grad_H / c_k  # Linearized H at the current weights
        x_new = np.asarray(spec.f.prox(forward, c_k), dtype=float).reshape(spec.n)
        ensure_finite(x_new, "iterate", k)
        norm_new = float(np.linalg.norm(x_new))
        if norm_new <= rule.tau:
            break  # Still inside B(tau)
        if rule.doublings >= tau_doubling_cap:
            raise DivergenceDetected(f"trust radius enlarged {rule.doublings} times; ||x^{k}|| = {norm_new:.3e}")
        rule.enlarge(spec, norm_new)
        lm.logger.debug(f"iteration {k}: tau enlarged to {rule.tau:.6g}")

    y_new = weight_update(spec, x_new)
    grad_new = ensure_finite(grad_H_x(spec, x_new, y_new), "gradient", k)
    objective = eval_smoothed_objective(spec, x_new)
    ensure_finite(objective, "objective", k)

    step = x_new - state.x
    step_norm = float(np.linalg.norm(step))
    w = grad_new - state.grad_H - c_k * step  # Element of the limiting subdifferential at x^{k+1}
    w_norm = float(np.linalg.norm(w))
    rho1_witness = (state.objective - objective) - 0.5 * (rule.gamma - 1.0) * modulus * step_norm ** 2
    rho2_witness = subgradient_bound(spec, rule, c_k) * step_norm - w_norm

    w_norm_stated = None
    if verbose:
        stated = grad_new - grad_H_x(spec, state.x, y_new) - c_k * step
        w_norm_stated = float(np.linalg.norm(stated))

    new_state = SolverState(x=x_new, y=y_new, grad_H=grad_new, objective=objective, c_prev=c_k, k=k)
    record = IterationRecord(k=k, objective=objective, step_norm=step_norm, w_norm=w_norm, c_k=c_k,
                             rho1_witness=float(rho1_witness), rho2_witness=float(rho2_witness),
                             w_norm_stated=w_norm_stated)
    return new_state, record


def default_tolerance(x0: NDArray) -> float:
    return c.STOP_TOL_FACTOR * (1.0 + float(np.linalg.norm(x0)))


def run_plirls(spec: ProblemSpec, x0, options: Optional[SolverOptions] = None) -> RunResult:
    """Iterate until step_norm <= step_tol and w_norm <= w_tol, max_iters, or tau growth cap."""
    options = options or SolverOptions()
    state = initial_state(spec, x0)
    norm0 = float(np.linalg.norm(state.x))
    tau0 = options.tau0 if options.tau0 is not None else c.TAU_INITIAL_FACTOR * max(1.0, norm0)
    if tau0 < norm0:
        raise InstanceError(f"tau0={tau0} is smaller than ||x0||={norm0}")
    step_tol = options.step_tol if options.step_tol is not None else default_tolerance(state.x)
    w_tol = options.w_tol if options.w_tol is not None else default_tolerance(state.x)
    rule = StepRule.for_spec(spec, options.gamma, tau0)
    verbose = options.diagnostics == "verbose"

    trace: List[IterationRecord] = []
    status = Status.MAX_ITERS
    for _ in range(options.max_iters):
        try:
            state, record = plirls_step(spec, state, rule, options.tau_doubling_cap, verbose)
        except DivergenceDetected as e:
            lm.lnp(f"Run diverged: {e}", style="diverged", level="warning")
            status = Status.DIVERGED
            break
        trace.append(record)
        if record.step_norm <= step_tol and record.w_norm <= w_tol:
            status = Status.CONVERGED
            break

    lm.logger.info(f"run_plirls: {status.value} after {len(trace)} iterations, F_eps = {state.objective:.10g}")
    return RunResult(x=state.x, trace=trace, status=status, state=state, rule=rule, step_tol=step_tol, w_tol=w_tol)


def weights_in_box(spec: ProblemSpec, y: WeightVector) -> bool:
    return in_weight_box(spec, y.weights)
