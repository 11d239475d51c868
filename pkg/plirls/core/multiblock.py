"""
Two-block PL-IRLS for sparse + low-rank decomposition under an l1 data term:

    min  w_* ||X||_* + w_1 ||Y||_1 + sum_i sqrt((A(X + Y)_i - b_i)^2 + eps^2)

X and Y are updated one after the other (Gauss-Seidel): SVT on X, soft thresholding on Y using
the updated X, then the closed-form weights z. Matrices are vectorized row-major.
"""

__copyright__ = "Copyright (c) 2024 Cisco and/or its affiliates."
__license__ = "Cisco Sample Code License, Version 1.1"

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field

from plirls.config.config import c
from plirls.core.linear_map import LinearMap
from plirls.core.prox import soft_threshold, svt_nuclear
from plirls.core.solver import IterationRecord, Status, WeightVector, default_tolerance
from plirls.exceptions import InstanceError
from plirls.funcs import ensure_finite
from plirls.logger.logrr import lm

# Largest tolerated relative gap in <Ax, u> = <x, A^T u> at construction
_ADJOINT_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class DecompositionSpec:
    A_op: LinearMap
    b: NDArray
    epsilon: float
    gamma: float = c.DEFAULT_GAMMA
    nuclear_weight: float = 1.0
    l1_weight: float = 1.0
    shape: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        b = np.array(self.b, dtype=float).ravel()
        if b.shape[0] != self.A_op.rows:
            raise InstanceError(f"b has length {b.shape[0]} but A maps into R^{self.A_op.rows}")
        b.setflags(write=False)
        object.__setattr__(self, "b", b)
        shape = self.shape
        if shape is None:
            side = int(round(np.sqrt(self.A_op.cols)))
            if side * side != self.A_op.cols:
                raise InstanceError(f"A acts on R^{self.A_op.cols}, which is not n x n; pass shape")
            shape = (side, side)
        shape = (int(shape[0]), int(shape[1]))
        if shape[0] * shape[1] != self.A_op.cols:
            raise InstanceError(f"shape {shape} does not match A acting on R^{self.A_op.cols}")
        object.__setattr__(self, "shape", shape)
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise InstanceError(f"epsilon must be > 0, got {self.epsilon}")
        if not self.gamma > 1:
            raise InstanceError(f"gamma must be > 1, got {self.gamma}")
        if self.nuclear_weight < 0 or self.l1_weight < 0:
            raise InstanceError("regularization weights must be nonnegative")
        if not self.A_op.is_dense and self.A_op.adjoint_mismatch(trials=3) > _ADJOINT_TOL:
            raise InstanceError("A_op adjoint is inconsistent with A_op")

    @classmethod
    def observed(cls, D, epsilon: float, **kwargs) -> 'DecompositionSpec':
        """A = vectorization, b = vec(D): decompose an observed matrix D."""
        D = np.asarray(D, dtype=float)
        if D.ndim != 2:
            raise InstanceError(f"D must be a matrix, got ndim={D.ndim}")
        return cls(A_op=LinearMap.identity(D.size), b=D.ravel(), epsilon=epsilon, shape=D.shape, **kwargs)

    @property
    def m(self) -> int:
        return self.A_op.rows

    @property
    def weight_cap(self) -> float:
        return 1.0 / (2.0 * self.epsilon)


@dataclass(frozen=True, eq=False)
class BlockState:
    X: NDArray
    Y: NDArray
    z: WeightVector
    objective: float
    c_k: Optional[float] = None
    d_k: Optional[float] = None
    k: int = 0


class MultiblockOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")

    max_iters: int = Field(default=c.DEFAULT_MAX_ITERS, ge=1)
    step_tol: Optional[float] = Field(default=None, gt=0.0)
    w_tol: Optional[float] = Field(default=None, gt=0.0)


@dataclass
class MultiblockResult:
    X: NDArray
    Y: NDArray
    trace: List[IterationRecord]
    status: Status
    state: BlockState

    @property
    def iterations(self) -> int:
        return len(self.trace)


def _residual(spec: DecompositionSpec, X, Y) -> NDArray:
    return spec.A_op.apply((np.asarray(X, dtype=float) + np.asarray(Y, dtype=float)).ravel()) - spec.b


def _check_block(spec: DecompositionSpec, M, name: str) -> NDArray:
    M = np.asarray(M, dtype=float)
    if M.shape != spec.shape:
        raise InstanceError(f"{name} must have shape {spec.shape}, got {M.shape}")
    return M


def _coupling_gradient(spec: DecompositionSpec, X, Y, z) -> NDArray:
    weights = np.asarray(getattr(z, "weights", z), dtype=float)
    if weights.shape != (spec.m,):
        raise InstanceError(f"z must have length {spec.m}, got shape {weights.shape}")
    r = _residual(spec, _check_block(spec, X, "X"), _check_block(spec, Y, "Y"))
    return spec.A_op.adjoint_apply(2.0 * weights * r).reshape(spec.shape)


def grad_H_X(spec: DecompositionSpec, X, Y, z) -> NDArray:
    """A^T(2 z * (A(X+Y) - b)) reshaped to the block shape."""
    return _coupling_gradient(spec, X, Y, z)


def grad_H_Y(spec: DecompositionSpec, X, Y, z) -> NDArray:
    """Same as grad_H_X: both blocks enter the coupling through X + Y."""
    return _coupling_gradient(spec, X, Y, z)


def z_update(spec: DecompositionSpec, X, Y) -> WeightVector:
    r = _residual(spec, X, Y)
    return WeightVector(1.0 / (2.0 * np.sqrt(r * r + spec.epsilon ** 2)))


def multiblock_objective(spec: DecompositionSpec, X, Y) -> float:
    """w_* ||X||_* + w_1 ||Y||_1 + sum_i sqrt(r_i^2 + eps^2)."""
    X = _check_block(spec, X, "X")
    Y = _check_block(spec, Y, "Y")
    nuclear = float(np.linalg.svd(X, compute_uv=False).sum()) if X.size else 0.0
    r = _residual(spec, X, Y)
    return (spec.nuclear_weight * nuclear + spec.l1_weight * float(np.abs(Y).sum())
            + float(np.sum(np.sqrt(r * r + spec.epsilon ** 2))))


def block_modulus(spec: DecompositionSpec, z: WeightVector) -> float:
    """2 ||A||^2 ||z||_inf: the gradient-Lipschitz modulus of either block for fixed z."""
    return 2.0 * spec.A_op.gram_norm * z.norm_inf


def initial_block_state(spec: DecompositionSpec, X0, Y0) -> BlockState:
    X0 = np.array(_check_block(spec, X0, "X0"), dtype=float)
    Y0 = np.array(_check_block(spec, Y0, "Y0"), dtype=float)
    objective = ensure_finite(multiblock_objective(spec, X0, Y0), "objective", 0)
    return BlockState(X=X0, Y=Y0, z=z_update(spec, X0, Y0), objective=objective)


def multiblock_step(spec: DecompositionSpec, state: BlockState):
    """One sweep X -> Y -> z. Returns (new state, record of (X^{k+1}, Y^{k+1}))."""
    k = state.k + 1
    modulus = block_modulus(spec, state.z)
    c_k = d_k = spec.gamma * modulus  # Same modulus for both blocks

    if c_k > 0:
        grad_X = grad_H_X(spec, state.X, state.Y, state.z)
        X_new = svt_nuclear(state.X - grad_X / c_k, spec.nuclear_weight / c_k)
        ensure_finite(X_new, "X", k)
        grad_Y = grad_H_Y(spec, X_new, state.Y, state.z)  # Gauss-Seidel: uses X^{k+1}
        Y_new = soft_threshold(state.Y - grad_Y / d_k, spec.l1_weight / d_k)
        ensure_finite(Y_new, "Y", k)
    else:
        # A = 0: the data term is constant, zero minimizes both regularizers
        grad_X = grad_Y = np.zeros(spec.shape)
        X_new, Y_new = np.zeros(spec.shape), np.zeros(spec.shape)

    z_new = z_update(spec, X_new, Y_new)  # Closed form, no step
    objective = ensure_finite(multiblock_objective(spec, X_new, Y_new), "objective", k)

    step_X, step_Y = X_new - state.X, Y_new - state.Y
    norm_X, norm_Y = float(np.linalg.norm(step_X)), float(np.linalg.norm(step_Y))
    step_norm = float(np.hypot(norm_X, norm_Y))

    # subgradient of the objective at (X^{k+1}, Y^{k+1}) read off the two prox optimality conditions
    grad_new = grad_H_X(spec, X_new, Y_new, z_new)
    w_X = grad_new - grad_X - c_k * step_X
    w_Y = grad_new - grad_Y - d_k * step_Y
    w_norm = float(np.hypot(np.linalg.norm(w_X), np.linalg.norm(w_Y)))
    rho1_witness = (state.objective - objective) - 0.5 * (spec.gamma - 1.0) * modulus * step_norm ** 2

    new_state = BlockState(X=X_new, Y=Y_new, z=z_new, objective=objective, c_k=c_k, d_k=d_k, k=k)
    record = IterationRecord(k=k, objective=objective, step_norm=step_norm, w_norm=w_norm, c_k=c_k,
                             rho1_witness=float(rho1_witness), rho2_witness=None,
                             step_norm_X=norm_X, step_norm_Y=norm_Y)
    return new_state, record


def run_multiblock(spec: DecompositionSpec, X0, Y0, options: Optional[MultiblockOptions] = None) -> MultiblockResult:
    """Sweep until the combined block step and the subgradient witness are both below tolerance."""
    options = options or MultiblockOptions()
    state = initial_block_state(spec, X0, Y0)
    start = np.concatenate([state.X.ravel(), state.Y.ravel()])
    step_tol = options.step_tol if options.step_tol is not None else default_tolerance(start)
    w_tol = options.w_tol if options.w_tol is not None else default_tolerance(start)

    trace: List[IterationRecord] = []
    status = Status.MAX_ITERS
    for _ in range(options.max_iters):
        state, record = multiblock_step(spec, state)
        trace.append(record)
        if record.step_norm <= step_tol and record.w_norm <= w_tol:
            status = Status.CONVERGED
            break

    lm.logger.info(f"run_multiblock: {status.value} after {len(trace)} iterations, objective = {state.objective:.10g}")
    return MultiblockResult(X=state.X, Y=state.Y, trace=trace, status=status, state=state)
