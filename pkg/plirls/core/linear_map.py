"""Dense or matrix-free linear maps with an adjoint and cached norm bounds."""

__copyright__ = "Copyright (c) 2024 Cisco and/or its affiliates."
__license__ = "Cisco Sample Code License, Version 1.1"

from typing import Callable, Optional, Tuple

import numpy as np
import scipy.linalg
from numpy.typing import NDArray
from scipy.sparse.linalg import LinearOperator

from plirls.config.config import c
from plirls.exceptions import InstanceError, NumericalError


def _power_iteration(gram_apply: Callable[[NDArray], NDArray], n: int) -> float:
    """Largest eigenvalue of a PSD map v -> B^T B v (deterministic start vector)."""
    if n == 0:
        return 0.0
    v = np.random.default_rng(0).standard_normal(n)
    v /= np.linalg.norm(v)
    estimate = 0.0
    for _ in range(c.POWER_ITERATION_MAX):
        w = gram_apply(v)
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            return 0.0
        v = w / norm_w
        if abs(norm_w - estimate) <= c.POWER_ITERATION_TOL * max(1.0, norm_w):
            estimate = norm_w
            break
        estimate = norm_w
    return estimate


class LinearMap:
    """
    A linear map B: R^cols -> R^rows with its adjoint.

    operator_norm (||B||) and gram_norm (||B^T B||) are computed once at construction: exactly
    by SVD for dense maps up to DENSE_NORM_LIMIT in each dimension, otherwise by power iteration
    inflated by POWER_ITERATION_SAFETY so that both stay upper bounds.
    """

    def __init__(
        self,
        shape: Tuple[int, int],
        apply: Callable[[NDArray], NDArray],
        adjoint_apply: Callable[[NDArray], NDArray],
        matrix: Optional[NDArray] = None,
        operator_norm: Optional[float] = None,
        gram_norm: Optional[float] = None,
        row_norms: Optional[NDArray] = None,
    ):
        rows, cols = int(shape[0]), int(shape[1])
        if rows < 0 or cols < 0:
            raise InstanceError(f"invalid shape {shape}")
        self.rows = rows
        self.cols = cols
        self._apply = apply
        self._adjoint_apply = adjoint_apply
        self.matrix = matrix
        self._row_norms = row_norms
        if operator_norm is None or gram_norm is None:
            operator_norm, gram_norm = self._compute_norms()
        self.operator_norm = float(operator_norm)
        self.gram_norm = float(gram_norm)

    @classmethod
    def from_dense(cls, matrix) -> 'LinearMap':
        B = np.array(matrix, dtype=float)
        if B.ndim == 1:
            B = B.reshape(1, -1)
        if B.ndim != 2:
            raise InstanceError(f"expected a 2-D matrix, got ndim={B.ndim}")
        B.setflags(write=False)
        return cls(B.shape, apply=lambda x: B @ x, adjoint_apply=lambda u: B.T @ u, matrix=B)

    @classmethod
    def from_callbacks(cls, shape, apply, adjoint_apply, operator_norm=None, gram_norm=None) -> 'LinearMap':
        return cls(shape, apply=apply, adjoint_apply=adjoint_apply,
                   operator_norm=operator_norm, gram_norm=gram_norm)

    @classmethod
    def identity(cls, n: int) -> 'LinearMap':
        return cls((n, n), apply=lambda x: np.array(x, dtype=float),
                   adjoint_apply=lambda u: np.array(u, dtype=float),
                   operator_norm=1.0 if n else 0.0, gram_norm=1.0 if n else 0.0,
                   row_norms=np.ones(n))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    @property
    def is_dense(self) -> bool:
        return self.matrix is not None

    def _compute_norms(self) -> Tuple[float, float]:
        if self.rows == 0 or self.cols == 0:
            return 0.0, 0.0
        if self.is_dense and max(self.shape) <= c.DENSE_NORM_LIMIT:
            try:
                sigma_max = float(scipy.linalg.svd(self.matrix, compute_uv=False)[0])
            except np.linalg.LinAlgError as e:
                raise NumericalError(f"SVD failed while computing ||B||: {e}") from e
            return sigma_max, sigma_max ** 2
        lam = _power_iteration(lambda v: self.adjoint_apply(self.apply(v)), self.cols)
        return c.POWER_ITERATION_SAFETY * np.sqrt(lam), c.POWER_ITERATION_SAFETY * lam

    def apply(self, x: NDArray) -> NDArray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.cols,):
            raise InstanceError(f"map expects a vector of length {self.cols}, got shape {x.shape}")
        return np.asarray(self._apply(x), dtype=float)

    def adjoint_apply(self, u: NDArray) -> NDArray:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.rows,):
            raise InstanceError(f"adjoint expects a vector of length {self.rows}, got shape {u.shape}")
        return np.asarray(self._adjoint_apply(u), dtype=float)

    def __matmul__(self, x: NDArray) -> NDArray:
        return self.apply(x)

    def row_norms(self) -> NDArray:
        """Euclidean norm of every row (every e_i^T B)."""
        if self._row_norms is None:
            if self.is_dense:
                norms = np.linalg.norm(self.matrix, axis=1)
            else:
                eye = np.eye(self.rows)
                norms = np.array([np.linalg.norm(self.adjoint_apply(eye[i])) for i in range(self.rows)])
            self._row_norms = norms
        return self._row_norms

    def as_linear_operator(self) -> LinearOperator:
        return LinearOperator(self.shape, matvec=self.apply, rmatvec=self.adjoint_apply, dtype=float)

    def adjoint_mismatch(self, trials: int = 10, rng: Optional[np.random.Generator] = None) -> float:
        """Largest relative gap |<Bx,u> - <x,B^T u>| over random test pairs."""
        rng = rng if rng is not None else np.random.default_rng(0)
        worst = 0.0
        for _ in range(trials):
            x = rng.standard_normal(self.cols)
            u = rng.standard_normal(self.rows)
            lhs = float(self.apply(x) @ u)
            rhs = float(x @ self.adjoint_apply(u))
            worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs)))
        return worst
