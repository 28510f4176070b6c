"""Brute-force references: dense eigensolve, direct solve, refined quadrature.

These deliberately avoid the primary code paths (power iteration, Neumann
summation) and use LAPACK through scipy instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .errors import ResourceError, SingularSystemError, ValidationError
from .operator import KernelOperator


@dataclass(frozen=True)
class OracleConfig:
    """Limits and tolerances of the reference computations.

    Attributes
    ----------
    refinement_factor : int
        Resolution multiplier of :func:`refined_reference` (>= 2).
    dense_limit : int
        Largest N accepted by the dense routines (>= 64).
    max_nodes : int
        Ceiling on the node count of a refined discretization.
    condition_limit : float
        Systems with a larger condition estimate count as singular.
    """

    refinement_factor: int = 2
    dense_limit: int = 1024
    max_nodes: int = 20000
    condition_limit: float = 1e12

    def __post_init__(self):
        if int(self.refinement_factor) != self.refinement_factor or self.refinement_factor < 2:
            raise ValidationError("refinement_factor must be an integer >= 2", "refinement_factor")
        if self.dense_limit < 64:
            raise ValidationError("dense_limit must be at least 64", "dense_limit")


DEFAULT_CONFIG = OracleConfig()


def _symmetric(op: KernelOperator) -> np.ndarray:
    sw = np.sqrt(op.weights)
    return sw[:, None] * op.matrix * sw[None, :]


def _check_size(op: KernelOperator, cfg: OracleConfig, what: str):
    if op.size > cfg.dense_limit:
        raise ResourceError(f"{what} refuses N={op.size} > dense_limit={cfg.dense_limit}; use power iteration",
                            sizes=(op.size,))


def dense_spectrum(op: KernelOperator, cfg: OracleConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Ascending eigenvalues of ``D^{1/2} K D^{1/2}``; the last is ``||T||``."""
    _check_size(op, cfg, "dense_spectrum")
    if op.divergent:
        raise ValidationError("operator with atoms has no finite spectrum", "measure")
    return sla.eigh(_symmetric(op), eigvals_only=True, driver="evd")


def symmetric_spectrum(A) -> np.ndarray:
    """Ascending eigenvalues of a small symmetric matrix."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or not np.allclose(A, A.T):
        raise ValidationError("matrix must be square and symmetric", "matrix")
    return sla.eigh(A, eigvals_only=True)


def direct_solve(op: KernelOperator, rhs, cfg: OracleConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Solve ``(I - K D) u = rhs`` by pivoted LU.

    Raises
    ------
    SingularSystemError
        When the 1-norm condition estimate exceeds ``cfg.condition_limit``.
    """
    _check_size(op, cfg, "direct_solve")
    rhs = np.asarray(rhs, dtype=float)
    if op.divergent:
        raise SingularSystemError("operator with atoms is unbounded", condition=float("inf"))
    A = np.eye(op.size) - op.matrix * op.weights[None, :]
    lu, piv = sla.lu_factor(A, check_finite=True)
    anorm = np.linalg.norm(A, 1)
    rcond = _rcond(lu, anorm)
    cond = float("inf") if rcond == 0 else 1.0 / rcond
    if not cond < cfg.condition_limit:
        raise SingularSystemError(f"I - K D is numerically singular (condition ~ {cond:.3g})", condition=cond)
    return sla.lu_solve((lu, piv), rhs)


def _rcond(lu, anorm) -> float:
    gecon = sla.get_lapack_funcs("gecon", (lu,))
    rcond, info = gecon(lu, anorm, norm="1")
    return float(rcond) if info == 0 else 0.0


@dataclass(frozen=True)
class RefinedValue:
    """Coarse and refined evaluations; ``error`` is their difference."""

    value: float
    coarse: float
    error: float
    factor: int
    sizes: tuple


def refined_reference(evaluate: Callable[[int], float], factor: int | None = None,
                      size: Callable[[int], int] | None = None,
                      cfg: OracleConfig = DEFAULT_CONFIG) -> RefinedValue:
    """Recompute a quadrature-based scalar at ``factor`` times the resolution.

    Parameters
    ----------
    evaluate : callable
        ``evaluate(scale)`` returns the quantity with every discretization
        parameter multiplied by ``scale``.
    factor : int, optional
        Defaults to ``cfg.refinement_factor``.
    size : callable, optional
        ``size(scale)`` gives the node count, checked against
        ``cfg.max_nodes`` before anything is computed.

    Raises
    ------
    ResourceError
        The refined discretization would exceed ``cfg.max_nodes``.
    """
    factor = cfg.refinement_factor if factor is None else factor
    if int(factor) != factor or factor < 2:
        raise ValidationError("factor must be an integer >= 2", "factor")
    sizes = (size(1), size(factor)) if size is not None else ()
    if sizes and sizes[1] > cfg.max_nodes:
        raise ResourceError(f"refined discretization needs {sizes[1]} nodes > {cfg.max_nodes}", sizes=sizes)
    coarse = float(evaluate(1))
    fine = float(evaluate(factor))
    return RefinedValue(fine, coarse, abs(fine - coarse), int(factor), sizes)


__all__ = ["OracleConfig", "RefinedValue", "dense_spectrum", "symmetric_spectrum", "direct_solve",
           "refined_reference"]
