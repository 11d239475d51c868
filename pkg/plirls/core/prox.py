"""
Closed-form proximal operators and projections.

prox_c^f(y) = argmin_x f(x) + (c/2)||x - y||^2. Set-valued proxes (l0, sparsity, rank) always
return the sparser / lower-rank candidate and report that a tie was broken.
"""

__copyright__ = "Copyright (c) 2024 Cisco and/or its affiliates."
__license__ = "Cisco Sample Code License, Version 1.1"

from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from plirls.config.config import c as config
from plirls.core.problem import ProxFriendlyTerm
from plirls.exceptions import NumericalError, ProxError

# Relative slack when testing membership of a closed set
_FEASIBILITY_RTOL = 1e-12
_RANK_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class ProxResult:
    point: NDArray
    tie_broken: bool = False


def _svd(M: NDArray) -> Tuple[NDArray, NDArray, NDArray]:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ProxError(f"expected a matrix, got ndim={M.ndim}")
    if max(M.shape) > config.PROX_SVD_LIMIT:
        raise ProxError(f"matrix of shape {M.shape} exceeds the SVD size limit {config.PROX_SVD_LIMIT}")
    try:
        return scipy.linalg.svd(M, full_matrices=False)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"SVD failed: {e}") from e


def soft_threshold(u, threshold: float) -> NDArray:
    """sign(u) * max(|u| - threshold, 0), entrywise."""
    if threshold < 0:
        raise ProxError(f"threshold must be nonnegative, got {threshold}")
    u = np.asarray(u, dtype=float)
    return np.sign(u) * np.maximum(np.abs(u) - threshold, 0.0)


def hard_threshold_l0(u, lam: float, c: float) -> ProxResult:
    """prox_c of lam*||.||_0: keep entries with |u_j| > sqrt(2 lam / c)."""
    if lam <= 0 or c <= 0:
        raise ProxError(f"lambda and c must be positive, got lambda={lam}, c={c}")
    u = np.asarray(u, dtype=float)
    magnitude = np.abs(u)
    threshold = np.sqrt(2.0 * lam / c)
    ties = (magnitude == threshold) & (magnitude > 0)
    point = np.where(magnitude > threshold, u, 0.0)
    return ProxResult(point=point, tie_broken=bool(np.any(ties)))


def project_sparsity(u, k: int) -> ProxResult:
    """Keep the k largest-magnitude entries; equal magnitudes are ranked by lowest index."""
    u = np.asarray(u, dtype=float)
    n = u.size
    if k < 0 or k > n:
        raise ProxError(f"k must lie in [0, {n}], got {k}")
    if k == n:
        return ProxResult(point=u.copy())
    magnitude = np.abs(u).ravel()
    order = np.argsort(-magnitude, kind="stable")
    point = np.zeros(n)
    keep = order[:k]
    point[keep] = u.ravel()[keep]
    tie = k > 0 and magnitude[order[k - 1]] == magnitude[order[k]] and magnitude[order[k]] > 0  # Cut falls inside a tie
    return ProxResult(point=point.reshape(u.shape), tie_broken=bool(tie))


def project_l1_ball(u, radius: float) -> NDArray:
    """Euclidean projection onto {||x||_1 <= radius} by the sorted-threshold construction."""
    if radius <= 0:
        raise ProxError(f"radius must be positive, got {radius}")
    u = np.asarray(u, dtype=float)
    magnitude = np.abs(u)
    if magnitude.sum() <= radius:
        return u.copy()
    sorted_mag = np.sort(magnitude.ravel())[::-1]
    cumulative = np.cumsum(sorted_mag)
    idx = np.arange(1, sorted_mag.size + 1)
    rho = np.nonzero(sorted_mag * idx > cumulative - radius)[0][-1]
    shift = (cumulative[rho] - radius) / (rho + 1.0)
    return np.sign(u) * np.maximum(magnitude - shift, 0.0)


def svt_nuclear(M, threshold: float) -> NDArray:
    """Singular value thresholding: prox of threshold*||.||_* with unit modulus."""
    if threshold < 0:
        raise ProxError(f"threshold must be nonnegative, got {threshold}")
    U, s, Vt = _svd(M)
    return (U * np.maximum(s - threshold, 0.0)) @ Vt


def rank_prox(M, lam: float, c: float) -> ProxResult:
    """prox_c of lam*rank(.): hard thresholding of the singular values at sqrt(2 lam / c)."""
    U, s, Vt = _svd(M)
    thresholded = hard_threshold_l0(s, lam, c)
    return ProxResult(point=(U * thresholded.point) @ Vt, tie_broken=thresholded.tie_broken)


def project_rank(M, k: int) -> ProxResult:
    """Best rank-k approximation (Eckart-Young); equal k-th and (k+1)-th singular values flag a tie."""
    M = np.asarray(M, dtype=float)
    if k < 0 or k > min(M.shape):
        raise ProxError(f"k must lie in [0, {min(M.shape)}], got {k}")
    U, s, Vt = _svd(M)
    kept = s.copy()
    kept[k:] = 0.0
    tie = 0 < k < s.size and s[k - 1] == s[k] and s[k] > 0
    return ProxResult(point=(U * kept) @ Vt, tie_broken=bool(tie))


def project_box(u, lower, upper) -> NDArray:
    u = np.asarray(u, dtype=float)
    lower = np.broadcast_to(np.asarray(lower, dtype=float), u.shape)
    upper = np.broadcast_to(np.asarray(upper, dtype=float), u.shape)
    if np.any(lower > upper):
        raise ProxError("box bounds are inverted")
    return np.clip(u, lower, upper)


# ProxFriendlyTerm factories: f together with its prox at modulus c

def l1_term(lam: float) -> ProxFriendlyTerm:
    if lam < 0:
        raise ProxError("lambda must be nonnegative")
    return ProxFriendlyTerm(value=lambda x: lam * float(np.abs(x).sum()),
                            prox=lambda y, c: soft_threshold(y, lam / c), name="l1")


def l0_term(lam: float) -> ProxFriendlyTerm:
    if lam <= 0:
        raise ProxError("lambda must be positive")
    return ProxFriendlyTerm(value=lambda x: lam * float(np.count_nonzero(x)),
                            prox=lambda y, c: hard_threshold_l0(y, lam, c).point, name="l0")


def sparsity_term(k: int) -> ProxFriendlyTerm:
    def value(x):
        return 0.0 if np.count_nonzero(x) <= k else np.inf

    return ProxFriendlyTerm(value=value, prox=lambda y, c: project_sparsity(y, k).point, name="sparsity")


def l1_ball_term(radius: float) -> ProxFriendlyTerm:
    def value(x):
        return 0.0 if np.abs(x).sum() <= radius * (1.0 + _FEASIBILITY_RTOL) else np.inf

    return ProxFriendlyTerm(value=value, prox=lambda y, c: project_l1_ball(y, radius), name="l1-ball")


def box_term(lower, upper) -> ProxFriendlyTerm:
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if np.any(lower > upper):
        raise ProxError("box bounds are inverted")

    def value(x):
        slack = _FEASIBILITY_RTOL * (1.0 + np.abs(x))
        return 0.0 if np.all(x >= lower - slack) and np.all(x <= upper + slack) else np.inf

    return ProxFriendlyTerm(value=value, prox=lambda y, c: project_box(y, lower, upper), name="box")


def _matrix_rank(X: NDArray) -> int:
    """Singular values below _RANK_RTOL * sigma_max count as zero (reconstruction round-off)."""
    if not X.size:
        return 0
    s = scipy.linalg.svd(X, compute_uv=False)
    return int(np.count_nonzero(s > _RANK_RTOL * s[0])) if s[0] > 0 else 0


def rank_term(lam: float, shape: Tuple[int, int]) -> ProxFriendlyTerm:
    """lam*rank(X) acting on row-major flattened matrices of the given shape."""
    return ProxFriendlyTerm(value=lambda x: lam * _matrix_rank(np.reshape(x, shape)),
                            prox=lambda y, c: rank_prox(np.reshape(y, shape), lam, c).point.ravel(), name="rank")


def rank_constraint_term(k: int, shape: Tuple[int, int]) -> ProxFriendlyTerm:
    def value(x):
        return 0.0 if _matrix_rank(np.reshape(x, shape)) <= k else np.inf

    return ProxFriendlyTerm(value=value, prox=lambda y, c: project_rank(np.reshape(y, shape), k).point.ravel(),
                            name="rank-constraint")

