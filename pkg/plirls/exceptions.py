"""Exception hierarchy shared by the library and the CLI."""

__copyright__ = "Copyright (c) 2024 Cisco and/or its affiliates."
__license__ = "Cisco Sample Code License, Version 1.1"

from typing import Optional


class PlirlsError(Exception):
    """Base class for every error raised by plirls."""


class InstanceError(PlirlsError, ValueError):
    """Invalid problem data: shapes, indices, weights outside their domain."""


class ProxError(PlirlsError, ValueError):
    """Invalid proximal-operator parameters."""


class NumericalError(PlirlsError, ArithmeticError):
    """SVD failure, oversized factorization or nonfinite oracle evaluation."""


class ConfigError(PlirlsError):
    """Run configuration that fails to parse or validate."""


class SolverError(PlirlsError, RuntimeError):
    """A run hit a nonfinite objective or gradient."""

    def __init__(self, message: str, iteration: Optional[int] = None, quantity: Optional[str] = None):
        self.iteration = iteration
        self.quantity = quantity
        detail = message
        if iteration is not None:
            detail += f" (iteration {iteration}"
            detail += f", {quantity})" if quantity else ")"
        super().__init__(detail)
