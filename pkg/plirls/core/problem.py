"""
Problem instances  min f(x) + s(x) + scale * sum_i (||B_i x - c_i||^2 + eps^2)^(nu/2)
and the evaluation of the smoothed objective, its smooth part h, and the auxiliary function Psi.

Indices of residual terms are 0-based.
"""

__copyright__ = "Copyright (c) 2024 Cisco and/or its affiliates."
__license__ = "Cisco Sample Code License, Version 1.1"

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Iterator, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import NDArray

from plirls.config.config import c
from plirls.core.linear_map import LinearMap
from plirls.exceptions import InstanceError
from plirls.funcs import as_vector

Modulus = Literal["profile", "majorizer"]


@dataclass(frozen=True, eq=False)
class AffineTerm:
    """One residual term B_i x - c_i."""
    map: LinearMap
    offset: NDArray
    offset_norm: float = field(init=False)

    def __post_init__(self):
        offset = np.array(self.offset, dtype=float).ravel()
        if offset.shape[0] != self.map.rows:
            raise InstanceError(f"offset has length {offset.shape[0]} but the map has {self.map.rows} rows")
        offset.setflags(write=False)
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "offset_norm", float(np.linalg.norm(offset)))

    @classmethod
    def dense(cls, B, c_i=None) -> 'AffineTerm':
        lin = LinearMap.from_dense(B)
        return cls(lin, np.zeros(lin.rows) if c_i is None else c_i)


@dataclass(frozen=True)
class SmoothTerm:
    """Differentiable s with an L_s-Lipschitz gradient (the user supplies the gradient)."""
    value: Callable[[NDArray], float]
    gradient: Callable[[NDArray], NDArray]
    lipschitz_modulus: float

    def __post_init__(self):
        if not self.lipschitz_modulus >= 0:
            raise InstanceError("lipschitz_modulus must be nonnegative")

    @classmethod
    def zero(cls) -> 'SmoothTerm':
        return cls(value=lambda x: 0.0, gradient=lambda x: np.zeros_like(x, dtype=float), lipschitz_modulus=0.0)

    @classmethod
    def least_squares(cls, A, b, lam: float = 1.0) -> 'SmoothTerm':
        """s(x) = (lam/2)||Ax - b||^2 with L_s = lam ||A^T A||."""
        A_map = LinearMap.from_dense(A)
        b = np.array(b, dtype=float).ravel()
        if b.shape[0] != A_map.rows:
            raise InstanceError(f"b has length {b.shape[0]}, A has {A_map.rows} rows")
        if lam < 0:
            raise InstanceError("lambda must be nonnegative")

        def value(x):
            r = A_map.apply(x) - b
            return 0.5 * lam * float(r @ r)

        def gradient(x):
            return lam * A_map.adjoint_apply(A_map.apply(x) - b)

        return cls(value=value, gradient=gradient, lipschitz_modulus=lam * A_map.gram_norm)

    @classmethod
    def half_squared_norm(cls, weight: float = 1.0) -> 'SmoothTerm':
        return cls(value=lambda x: 0.5 * weight * float(x @ x), gradient=lambda x: weight * np.asarray(x, dtype=float),
                   lipschitz_modulus=abs(weight))


@dataclass(frozen=True)
class ProxFriendlyTerm:
    """Extended-real f with a computable prox: prox(y, c) returns one element of prox_c^f(y)."""
    value: Callable[[NDArray], float]
    prox: Callable[[NDArray, float], NDArray]
    name: str = "custom"

    @classmethod
    def zero(cls) -> 'ProxFriendlyTerm':
        return cls(value=lambda x: 0.0, prox=lambda y, modulus: np.array(y, dtype=float), name="zero")


class TermSet(ABC):
    """The residual family {(B_i, c_i)}; works on the stacked residual u = (B_1x-c_1, ..., B_mx-c_m)."""

    n: int
    m: int

    @abstractmethod
    def residual(self, x: NDArray) -> NDArray:
        """Stacked residual vector."""

    @abstractmethod
    def norms_of(self, u: NDArray) -> NDArray:
        """Per-term Euclidean norms of a stacked residual."""

    @abstractmethod
    def weighted_adjoint(self, u: NDArray, coefficients: NDArray) -> NDArray:
        """sum_i coefficients_i * B_i^T u_i."""

    @abstractmethod
    def __getitem__(self, i: int) -> AffineTerm:
        """Materialise term i."""

    @property
    @abstractmethod
    def operator_norms(self) -> NDArray:
        """||B_i|| per term."""

    @property
    @abstractmethod
    def gram_norms(self) -> NDArray:
        """||B_i^T B_i|| per term."""

    @property
    @abstractmethod
    def offset_norms(self) -> NDArray:
        """||c_i|| per term."""

    @property
    @abstractmethod
    def stacked_gram_norm(self) -> float:
        """An upper bound on ||sum_i B_i^T B_i||."""

    def __len__(self) -> int:
        return self.m

    def __iter__(self) -> Iterator[AffineTerm]:
        return (self[i] for i in range(self.m))

    def _check_index(self, i: int) -> int:
        if not isinstance(i, (int, np.integer)) or not 0 <= i < self.m:
            raise InstanceError(f"term index {i} out of range for m={self.m}")
        return int(i)


class RowTerms(TermSet):
    """Every row of one map is a term: B_i = e_i^T B, c_i = offset_i."""

    def __init__(self, B: Union[LinearMap, NDArray], offset=None):
        self.map = B if isinstance(B, LinearMap) else LinearMap.from_dense(B)
        self.m, self.n = self.map.rows, self.map.cols
        offset = np.zeros(self.m) if offset is None else np.array(offset, dtype=float).ravel()
        if offset.shape[0] != self.m:
            raise InstanceError(f"offset has length {offset.shape[0]} but the map has {self.m} rows")
        offset.setflags(write=False)
        self.offset = offset
        self._operator_norms = self.map.row_norms()
        self._operator_norms.setflags(write=False)

    def residual(self, x):
        return self.map.apply(x) - self.offset

    def norms_of(self, u):
        return np.abs(u)

    def weighted_adjoint(self, u, coefficients):
        return self.map.adjoint_apply(coefficients * u)

    def __getitem__(self, i):
        i = self._check_index(i)
        if self.map.is_dense:
            row = self.map.matrix[i]
        else:
            unit = np.zeros(self.m)
            unit[i] = 1.0
            row = self.map.adjoint_apply(unit)
        return AffineTerm(LinearMap.from_dense(row.reshape(1, -1)), self.offset[i:i + 1])

    @property
    def operator_norms(self):
        return self._operator_norms

    @property
    def gram_norms(self):
        return self._operator_norms ** 2

    @property
    def offset_norms(self):
        return np.abs(self.offset)

    @property
    def stacked_gram_norm(self):
        return self.map.gram_norm


class BlockTerms(TermSet):
    """A list of general terms with k_i rows each."""

    def __init__(self, terms: Sequence[AffineTerm], n: Optional[int] = None):
        self.terms: Tuple[AffineTerm, ...] = tuple(terms)
        if not self.terms and n is None:
            raise InstanceError("an empty term set needs the dimension n")
        widths = {t.map.cols for t in self.terms}
        if n is not None:
            widths.add(int(n))
        if len(widths) > 1:
            raise InstanceError(f"all terms must share the same number of columns, got {sorted(widths)}")
        self.n = widths.pop()
        self.m = len(self.terms)
        sizes = np.array([t.map.rows for t in self.terms], dtype=int)
        self._starts = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(int) if self.m else np.zeros(0, dtype=int)
        self._sizes = sizes
        self._offsets = np.concatenate([t.offset for t in self.terms]) if self.m else np.zeros(0)
        self._stacked = (np.vstack([t.map.matrix for t in self.terms])
                         if self.m and all(t.map.is_dense for t in self.terms) else None)
        self._operator_norms = np.array([t.map.operator_norm for t in self.terms])
        self._gram_norms = np.array([t.map.gram_norm for t in self.terms])
        self._offset_norms = np.array([t.offset_norm for t in self.terms])
        if self._stacked is not None and max(self._stacked.shape) <= c.DENSE_NORM_LIMIT:
            self._stacked_gram = LinearMap.from_dense(self._stacked).gram_norm
        else:
            self._stacked_gram = float(self._gram_norms.sum())

    @classmethod
    def empty(cls, n: int) -> 'BlockTerms':
        return cls((), n=n)

    def residual(self, x):
        if self.m == 0:
            return np.zeros(0)
        if self._stacked is not None:
            return self._stacked @ x - self._offsets
        return np.concatenate([t.map.apply(x) - t.offset for t in self.terms])

    def norms_of(self, u):
        if self.m == 0:
            return np.zeros(0)
        if np.all(self._sizes > 0):
            return np.sqrt(np.add.reduceat(u * u, self._starts))
        # reduceat mishandles empty segments
        return np.array([np.linalg.norm(u[s:s + k]) for s, k in zip(self._starts, self._sizes)])

    def weighted_adjoint(self, u, coefficients):
        if self.m == 0:
            return np.zeros(self.n)
        expanded = np.repeat(coefficients, self._sizes) * u
        if self._stacked is not None:
            return self._stacked.T @ expanded
        out = np.zeros(self.n)
        for t, start, size in zip(self.terms, self._starts, self._sizes):
            out += t.map.adjoint_apply(expanded[start:start + size])
        return out

    def __getitem__(self, i):
        return self.terms[self._check_index(i)]

    @property
    def operator_norms(self):
        return self._operator_norms

    @property
    def gram_norms(self):
        return self._gram_norms

    @property
    def offset_norms(self):
        return self._offset_norms

    @property
    def stacked_gram_norm(self):
        return self._stacked_gram


@dataclass(frozen=True)
class ProblemSpec:
    """
    A full instance. `scale` multiplies the residual sum, `modulus` selects the step-modulus family
    used by the solver, and `shape` (optional) is the shape iterates are reshaped to by matrix apps.
    """
    f: ProxFriendlyTerm
    s: SmoothTerm
    terms: TermSet
    epsilon: float
    nu: float = 1.0
    scale: float = 1.0
    modulus: Modulus = "profile"
    shape: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if isinstance(self.terms, (list, tuple)):
            object.__setattr__(self, "terms", BlockTerms(self.terms))
        if not isinstance(self.terms, TermSet):
            raise InstanceError("terms must be a TermSet or a non-empty list of AffineTerm")
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise InstanceError(f"epsilon must be > 0, got {self.epsilon}")
        if not 0 < self.nu <= 1:
            raise InstanceError(f"nu must lie in (0, 1], got {self.nu}")
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise InstanceError(f"scale must be > 0, got {self.scale}")
        if self.modulus not in ("profile", "majorizer"):
            raise InstanceError(f"unknown modulus family {self.modulus!r}")
        if self.shape is not None and int(np.prod(self.shape)) != self.terms.n:
            raise InstanceError(f"shape {self.shape} does not hold {self.terms.n} entries")

    @property
    def n(self) -> int:
        return self.terms.n

    @property
    def m(self) -> int:
        return self.terms.m

    @property
    def theta(self) -> float:
        return self.nu / (2.0 - self.nu)

    @property
    def kappa(self) -> float:
        """
        ((2-nu)/nu) (nu/2)^(2/(2-nu)): min over y of q y + kappa / y^theta is q^(nu/2), attained at the
        weight update.
        """
        return ((2.0 - self.nu) / self.nu) * (self.nu / 2.0) ** (2.0 / (2.0 - self.nu))

    @property
    def weight_cap(self) -> float:
        """Upper end of the weight box (0, nu / (2 eps^(2-nu))]."""
        if self.nu == 1.0:
            return 1.0 / (2.0 * self.epsilon)
        return self.nu / (2.0 * self.epsilon ** (2.0 - self.nu))


def _smoothed_terms(spec: ProblemSpec, q: NDArray) -> float:
    """sum_i q_i^(nu/2) where q_i = r_i^2 + eps^2."""
    if spec.nu == 1.0:
        return float(np.sum(np.sqrt(q)))
    return float(np.sum(q ** (spec.nu / 2.0)))


def _gradient_coefficients(spec: ProblemSpec, q: NDArray) -> NDArray:
    """nu * q_i^((nu-2)/2): the derivative of q^(nu/2) with respect to r^2, times 2."""
    if spec.nu == 1.0:
        return 1.0 / np.sqrt(q)
    return spec.nu * q ** ((spec.nu - 2.0) / 2.0)


def residual_norms(spec: ProblemSpec, x) -> NDArray:
    x = as_vector(x, spec.n)
    return spec.terms.norms_of(spec.terms.residual(x))


def eval_p(spec: ProblemSpec, x, i: int) -> float:
    """p_i(x) = sqrt(||B_i x - c_i||^2 + eps^2)."""
    term = spec.terms[i]
    x = as_vector(x, spec.n)
    r = term.map.apply(x) - term.offset
    return float(np.sqrt(r @ r + spec.epsilon ** 2))


def smooth_part(spec: ProblemSpec, x) -> float:
    """h(x) = s(x) + scale * sum_i (r_i^2 + eps^2)^(nu/2)."""
    x = as_vector(x, spec.n)
    q = residual_norms(spec, x) ** 2 + spec.epsilon ** 2
    return float(spec.s.value(x)) + spec.scale * _smoothed_terms(spec, q)


def eval_smoothed_objective(spec: ProblemSpec, x) -> float:
    """F_eps(x) = f(x) + h(x); +inf whenever f(x) is +inf."""
    x = as_vector(x, spec.n)
    fx = float(spec.f.value(x))
    if fx == np.inf:
        return np.inf
    return fx + smooth_part(spec, x)


def grad_h(spec: ProblemSpec, x) -> NDArray:
    x = as_vector(x, spec.n)
    grad = np.asarray(spec.s.gradient(x), dtype=float)
    if spec.m == 0:
        return grad
    u = spec.terms.residual(x)
    q = spec.terms.norms_of(u) ** 2 + spec.epsilon ** 2
    return grad + spec.scale * spec.terms.weighted_adjoint(u, _gradient_coefficients(spec, q))


def in_weight_box(spec: ProblemSpec, y: NDArray) -> bool:
    cap = spec.weight_cap * (1.0 + c.WEIGHT_BOX_RTOL)
    return bool(np.all(y > 0) and np.all(y <= cap))


def eval_auxiliary(spec: ProblemSpec, x, y) -> float:
    """
    Psi(x, y) = f(x) + s(x) + scale * sum_i [(r_i^2 + eps^2) y_i + kappa / y_i^theta],
    +inf outside the weight box. Nonpositive weights are rejected.
    """
    x = as_vector(x, spec.n)
    y = as_vector(getattr(y, "weights", y), spec.m, name="y")
    if np.any(y <= 0):
        raise InstanceError("weights must be strictly positive")
    if not in_weight_box(spec, y):
        return np.inf
    fx = float(spec.f.value(x))
    if fx == np.inf:
        return np.inf
    q = residual_norms(spec, x) ** 2 + spec.epsilon ** 2
    if spec.nu == 1.0:
        barrier = float(np.sum(0.25 / y))
    else:
        barrier = float(np.sum(spec.kappa / y ** spec.theta))
    return fx + float(spec.s.value(x)) + spec.scale * (float(q @ y) + barrier)
