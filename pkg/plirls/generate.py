"""
Deterministic synthetic instances.

Vector kinds: A with i.i.d. N(0, 1)/sqrt(m) entries, a k-sparse x_true, b = A x_true plus
impulse noise on round(sparsity * m) measurements. Matrix kinds: D = U V^T (rank r) plus impulse
corruption on round(sparsity * rows * cols) entries. Impulses have magnitude noise * U(1, 2) and a
random sign, so every corrupted entry really differs from the clean one.
"""

__copyright__ = "Copyright (c) 2024 Cisco and/or its affiliates."
__license__ = "Cisco Sample Code License, Version 1.1"

from pathlib import Path
from typing import Dict

import numpy as np

from plirls.exceptions import InstanceError
from plirls.funcs import PathLike, save_matrix
from plirls.logger.logrr import lm
from plirls.schemas import MATRIX_KINDS, VECTOR_KINDS, Dims, GenerateSource

# File stem for every generated array
INSTANCE_FILES = {
    "A": "A.txt", "b": "b.txt", "x_true": "x_true.txt",
    "D": "D.txt", "X_true": "X_true.txt", "S_true": "S_true.txt",
}


def _impulses(rng: np.random.Generator, size: int, count: int, noise: float) -> np.ndarray:
    corruption = np.zeros(size)
    if count == 0:
        return corruption
    idx = rng.choice(size, count, replace=False)
    signs = rng.choice(np.array([-1.0, 1.0]), count)
    corruption[idx] = noise * rng.uniform(1.0, 2.0, count) * signs
    return corruption


def _vector_instance(rng: np.random.Generator, dims: Dims, sparsity: float, noise: float) -> Dict[str, np.ndarray]:
    m, n, k = dims.m, dims.n, dims.k
    if m is None or k is None:
        raise InstanceError("vector instances need dims.m and dims.k")
    if k > n:
        raise InstanceError(f"k={k} exceeds n={n}")
    A = rng.standard_normal((m, n)) / np.sqrt(m)
    x_true = np.zeros(n)
    support = np.sort(rng.choice(n, k, replace=False))
    x_true[support] = rng.standard_normal(k)
    b = A @ x_true + _impulses(rng, m, int(round(sparsity * m)), noise)
    return {"A": A, "b": b, "x_true": x_true}


def _matrix_instance(rng: np.random.Generator, rows: int, cols: int, rank: int,
                     sparsity: float, noise: float) -> Dict[str, np.ndarray]:
    if rank is None:
        raise InstanceError("matrix instances need dims.rank")
    if rank > min(rows, cols):
        raise InstanceError(f"rank={rank} exceeds min({rows}, {cols})")
    L = rng.standard_normal((rows, rank)) @ rng.standard_normal((rank, cols))
    S = _impulses(rng, rows * cols, int(round(sparsity * rows * cols)), noise).reshape(rows, cols)
    return {"D": L + S, "X_true": L, "S_true": S}


def make_instance(kind: str, seed: int, source: GenerateSource) -> Dict[str, np.ndarray]:
    """Arrays of a synthetic instance; the same (kind, seed, source) always gives the same arrays."""
    if not 0 <= seed < 2 ** 64:
        raise InstanceError(f"seed must be a 64-bit unsigned value, got {seed}")
    rng = np.random.default_rng(seed)
    dims = source.dims
    if kind in VECTOR_KINDS:
        return _vector_instance(rng, dims, source.sparsity, source.noise)
    if kind == "multiblock":
        return _matrix_instance(rng, dims.n, dims.n, dims.rank, source.sparsity, source.noise)
    if kind in MATRIX_KINDS:
        return _matrix_instance(rng, dims.m or dims.n, dims.n, dims.rank, source.sparsity, source.noise)
    raise InstanceError(f"unknown problem kind {kind!r}")


def write_instance(arrays: Dict[str, np.ndarray], out_dir: PathLike) -> Dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name, array in arrays.items():
        path = out_dir / INSTANCE_FILES[name]
        save_matrix(path, array)
        paths[name] = path
    return paths


def generate_instance(kind: str, seed: int, source: GenerateSource, out_dir: PathLike) -> Dict[str, Path]:
    """Generate and write an instance with its ground truth; returns the written paths by array name."""
    paths = write_instance(make_instance(kind, seed, source), out_dir)
    lm.logger.info(f"generated {kind} instance (seed {seed}) in {out_dir}")
    return paths
