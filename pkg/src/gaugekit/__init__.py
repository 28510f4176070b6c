"""Gauges, perturbed Martin kernels and existence criteria for ``-Δu = ωu`` on balls."""

from . import balayage, bounds, domain, measure, operator, oracle, riccati
from ._backend import NAME as BACKEND
from .balayage import BoundaryData, existence_verdict
from .domain import BallDomain, sphere_quadrature
from .errors import (ConvergenceError, DataError, DomainError, GaugekitError, ResourceError,
                     SingularSystemError, UsageError, ValidationError)
from .measure import DiscreteMeasure, MeasureSpec, discretize
from .operator import KernelOperator, assemble, gauge, neumann_sum

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BallDomain", "BoundaryData", "ConvergenceError", "DataError", "DiscreteMeasure", "DomainError",
    "GaugekitError", "KernelOperator", "MeasureSpec", "ResourceError", "SingularSystemError", "UsageError",
    "ValidationError", "assemble", "balayage", "bounds", "discretize", "domain", "existence_verdict", "gauge",
    "measure", "neumann_sum", "operator", "oracle", "riccati", "sphere_quadrature",
]
