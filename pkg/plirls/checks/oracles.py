"""
Independent reference computations used by the check suites and the tests: central finite
differences, grid and exhaustive prox minimization, and grid minimization of F_eps on toys.
Nothing here is used by the solvers themselves.
"""

__copyright__ = "Copyright (c) 2024 Cisco and/or its affiliates."
__license__ = "Cisco Sample Code License, Version 1.1"

import itertools
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import scipy.optimize
from numpy.typing import NDArray

from plirls.core.problem import ProblemSpec, eval_smoothed_objective, grad_h
from plirls.exceptions import InstanceError, NumericalError, ProxError

EXHAUSTIVE_DIM_LIMIT = 6
GRID_DIM_LIMIT = 3
_TIE_RTOL = 1e-12


def fd_gradient(fun: Callable[[NDArray], float], x, step: float = 1e-5) -> NDArray:
    """Central differences with a per-coordinate step of step * max(1, |x_j|)."""
    if not step > 0:
        raise InstanceError(f"step must be > 0, got {step}")
    x = np.array(x, dtype=float)
    grad = np.zeros_like(x)
    for j in range(x.size):
        h = step * max(1.0, abs(x[j]))
        forward, backward = x.copy(), x.copy()
        forward[j] += h
        backward[j] -= h
        f_plus, f_minus = float(fun(forward)), float(fun(backward))
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise NumericalError(f"nonfinite function value near coordinate {j}")
        grad[j] = (f_plus - f_minus) / (2.0 * h)
    return grad


@dataclass(frozen=True)
class Grid:
    lo: float
    hi: float
    step: float

    def points(self) -> NDArray:
        if not self.step > 0:
            raise InstanceError("grid step must be > 0")
        if self.lo > self.hi:
            raise InstanceError(f"empty grid [{self.lo}, {self.hi}]")
        count = int(np.floor((self.hi - self.lo) / self.step + 1e-9)) + 1
        return self.lo + self.step * np.arange(count)


@dataclass(frozen=True, eq=False)
class GridResult:
    point: NDArray
    value: float
    coarse: bool = False


def _flag_coarse(values: NDArray, best: int, step_radius: int = 2) -> bool:
    """Another grid point within step_radius steps attains the minimum value: the grid cannot separate them."""
    best_idx = np.unravel_index(best, values.shape)
    best_value = values[best_idx]
    window = tuple(slice(max(0, i - step_radius), i + step_radius + 1) for i in best_idx)
    local = values[window]
    near = np.abs(local - best_value) <= _TIE_RTOL * (1.0 + abs(best_value))
    return int(np.count_nonzero(near)) > 1


def prox_bruteforce(fun: Callable[[NDArray], float], u, c: float, grid: Grid) -> GridResult:
    """argmin over a product grid of fun(x) + (c/2)||x - u||^2, dimension at most 3."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.size > GRID_DIM_LIMIT:
        raise ProxError(f"grid oracle supports dimension <= {GRID_DIM_LIMIT}, got {u.size}")
    axis = grid.points()
    mesh = np.meshgrid(*([axis] * u.size), indexing="ij")
    candidates = np.stack([m.ravel() for m in mesh], axis=1)
    values = np.array([float(fun(x)) + 0.5 * c * float((x - u) @ (x - u)) for x in candidates])
    best = int(np.argmin(values))
    return GridResult(point=candidates[best], value=float(values[best]),
                      coarse=_flag_coarse(values.reshape(mesh[0].shape), best))


def _better(value: float, best: float) -> bool:
    return value < best - _TIE_RTOL * (1.0 + abs(best))


def _check_exhaustive(u: NDArray):
    if u.size > EXHAUSTIVE_DIM_LIMIT:
        raise ProxError(f"exhaustive oracle supports dimension <= {EXHAUSTIVE_DIM_LIMIT}, got {u.size}")


def prox_l0_exhaustive(u, lam: float, c: float) -> NDArray:
    """Enumerate every support; the sparsest optimal support wins, then the lexicographically first."""
    u = np.asarray(u, dtype=float)
    _check_exhaustive(u)
    best_point, best_value = None, np.inf
    for size in range(u.size + 1):
        for support in itertools.combinations(range(u.size), size):
            point = np.zeros_like(u)
            point[list(support)] = u[list(support)]
            value = lam * size + 0.5 * c * float(np.sum((u - point) ** 2))
            if best_point is None or _better(value, best_value):
                best_point, best_value = point, value
    return best_point


def project_sparsity_exhaustive(u, k: int) -> NDArray:
    u = np.asarray(u, dtype=float)
    _check_exhaustive(u)
    if not 0 <= k <= u.size:
        raise ProxError(f"k must lie in [0, {u.size}]")
    best_point, best_value = None, np.inf
    for support in itertools.combinations(range(u.size), k):
        point = np.zeros_like(u)
        point[list(support)] = u[list(support)]
        value = float(np.sum((u - point) ** 2))
        if best_point is None or _better(value, best_value):
            best_point, best_value = point, value
    return best_point


def _truncations(M: NDArray):
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    for r in range(s.size + 1):
        yield r, (U[:, :r] * s[:r]) @ Vt[:r]


def rank_prox_exhaustive(M, lam: float, c: float) -> NDArray:
    """Compare lam * r + (c/2)||M - M_r||^2 over every Eckart-Young truncation M_r; lower rank wins ties."""
    M = np.asarray(M, dtype=float)
    if min(M.shape) > EXHAUSTIVE_DIM_LIMIT:
        raise ProxError(f"exhaustive oracle supports rank <= {EXHAUSTIVE_DIM_LIMIT}, got shape {M.shape}")
    best_point, best_value = None, np.inf
    for r, M_r in _truncations(M):
        value = lam * r + 0.5 * c * float(np.sum((M - M_r) ** 2))
        if best_point is None or _better(value, best_value):
            best_point, best_value = M_r, value
    return best_point


def project_rank_exhaustive(M, k: int) -> NDArray:
    M = np.asarray(M, dtype=float)
    for r, M_r in _truncations(M):
        if r == k:
            return M_r
    raise ProxError(f"k must lie in [0, {min(M.shape)}]")


def grid_minimize_F(spec: ProblemSpec, box: Sequence[Tuple[float, float]], step: float,
                    refine: bool = False) -> Tuple[NDArray, float]:
    """
    Dense grid minimum of F_eps over box (one (lo, hi) pair per coordinate, n <= 2).
    With refine=True the grid minimizer seeds a Nelder-Mead polish, kept only if it improves.
    """
    if spec.n > 2:
        raise InstanceError(f"grid minimization supports n <= 2, got n={spec.n}")
    if len(box) != spec.n:
        raise InstanceError(f"box has {len(box)} intervals for n={spec.n}")
    axes = [Grid(lo, hi, step).points() for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    candidates = np.stack([m.ravel() for m in mesh], axis=1)
    values = np.array([eval_smoothed_objective(spec, x) for x in candidates])
    best = int(np.argmin(values))
    x_grid, F_grid = candidates[best].copy(), float(values[best])
    if refine:
        polished = scipy.optimize.minimize(lambda x: eval_smoothed_objective(spec, x), x_grid, method="Nelder-Mead",
                                           options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 20_000})
        if polished.fun < F_grid:
            x_grid, F_grid = np.asarray(polished.x, dtype=float), float(polished.fun)
    return x_grid, F_grid


def reference_prox_gradient(spec: ProblemSpec, x0, iterations: int, step: Optional[float] = None,
                            tol: float = 0.0) -> NDArray:
    """
    Plain proximal gradient on F_eps with step 1/L_h, L_h = L_s + scale * nu * eps^(nu-2) * ||sum B_i^T B_i||.
    Runs `iterations` steps, or stops once a step moves x by at most tol * (1 + ||x||).
    """
    if step is None:
        L_h = (spec.s.lipschitz_modulus
               + spec.scale * spec.nu * spec.epsilon ** (spec.nu - 2.0) * spec.terms.stacked_gram_norm)
        step = 1.0 / L_h
    x = np.array(x0, dtype=float)
    for _ in range(iterations):
        x_new = np.asarray(spec.f.prox(x - step * grad_h(spec, x), 1.0 / step), dtype=float)
        moved = float(np.linalg.norm(x_new - x))
        x = x_new
        if moved <= tol * (1.0 + float(np.linalg.norm(x))):
            break
    return x
