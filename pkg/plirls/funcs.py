"""
Small shared helpers: the dense text matrix format and finiteness guards.

Text format: first line "rows cols", then the entries row-major, whitespace separated.
"""

__copyright__ = "Copyright (c) 2024 Cisco and/or its affiliates."
__license__ = "Cisco Sample Code License, Version 1.1"

from pathlib import Path
from typing import Union

import numpy as np

from plirls.exceptions import InstanceError, SolverError

PathLike = Union[str, Path]


def format_float(value: float) -> str:
    """Shortest round-trip representation; identical inputs give identical bytes."""
    if np.isnan(value):
        return "nan"
    if np.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(float(value))


def load_matrix(path: PathLike) -> np.ndarray:
    """Read a matrix in the text format."""
    text = Path(path).read_text(encoding="utf-8").split()
    if len(text) < 2:
        raise InstanceError(f"{path}: missing 'rows cols' header")
    try:
        rows, cols = int(text[0]), int(text[1])
        values = np.array([float(tok) for tok in text[2:]], dtype=float)
    except ValueError as e:
        raise InstanceError(f"{path}: {e}") from e
    if rows < 0 or cols < 0 or values.size != rows * cols:
        raise InstanceError(f"{path}: header says {rows}x{cols} but {values.size} entries follow")
    return values.reshape(rows, cols)


def load_vector(path: PathLike) -> np.ndarray:
    """Read a vector stored as an n x 1 or 1 x n matrix."""
    matrix = load_matrix(path)
    if min(matrix.shape) > 1:
        raise InstanceError(f"{path}: expected a vector, got shape {matrix.shape}")
    return matrix.ravel()


def save_matrix(path: PathLike, matrix: np.ndarray):
    """Write a matrix (vectors are written as a single column)."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim == 1:
        matrix = matrix.reshape(-1, 1)
    lines = [f"{matrix.shape[0]} {matrix.shape[1]}"]
    lines.extend(" ".join(format_float(v) for v in row) for row in matrix)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def ensure_finite(value, quantity: str, iteration: int):
    """Abort the run when a smooth quantity has overflowed or become NaN."""
    if not np.all(np.isfinite(value)):
        raise SolverError("nonfinite value encountered", iteration=iteration, quantity=quantity)
    return value


def as_vector(x, n: int, name: str = "x") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != n:
        raise InstanceError(f"{name} must have shape ({n},), got {x.shape}")
    return x
