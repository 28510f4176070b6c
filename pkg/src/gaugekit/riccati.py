"""Radial gauge ODE and the logarithmic (Riccati) transform of the gauge.

For a radial density q on a ball the gauge solves
``u'' + (n-1)/r u' + q u = 0`` with ``u'(0) = 0`` and ``u(R) = 1``, and
``v = log u`` solves the integral equation ``v = G(|∇v|^2 + q)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np
from scipy.integrate import cumulative_trapezoid

from . import domain as dom
from .errors import DomainError, UsageError, ValidationError
from .potential import RadialDensity, as_density


@dataclass(frozen=True)
class RadialProfile:
    """Values of a radial function on a grid ``0 = r_0 < ... < r_M = R``.

    ``exists`` is False when the solver found no positive solution; the
    values are then NaN.
    """

    grid: np.ndarray
    values: np.ndarray
    derivative: np.ndarray
    exists: bool = True
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        if g.ndim != 1 or len(g) < 3 or g[0] != 0.0 or np.any(np.diff(g) <= 0):
            raise ValidationError("radial grid must start at 0 and increase strictly", "grid")

    def at(self, r) -> np.ndarray:
        """Linear interpolation of the values."""
        return np.interp(r, self.grid, self.values)


def _derivative(r, u):
    # centered differences inside, second-order one-sided at the ends
    return np.gradient(u, r, edge_order=2)


def radial_gauge_ode(d: dom.BallDomain, q_profile, grid_size: int = 2000) -> RadialProfile:
    """Gauge of a radial density by a symmetric finite-volume scheme.

    Cell ``i`` is ``[r_{i-1/2}, r_{i+1/2}]``; fluxes are
    ``r^{n-1} (u_{i+1} - u_i)/h`` and the source is the exact cell integral
    of ``q s^{n-1}`` times ``u_i``.  The matrix is symmetric tridiagonal;
    the solution is accepted only when every ``LDL^T`` pivot is positive,
    otherwise ``exists`` is False (past the first weighted eigenvalue).
    """
    if grid_size < 4:
        raise ValidationError("grid_size must be at least 4", "grid_size")
    q = as_density(q_profile, d)
    n, R, M = d.dim, d.radius, int(grid_size)
    r = np.linspace(0.0, R, M + 1)
    h = R / M
    flux = (0.5 * (r[:-1] + r[1:])) ** (n - 1) / h  # a_{i+1/2}, i = 0..M-1
    src = q.moments(np.concatenate([[0.0], 0.5 * (r[:-1] + r[1:])]), n - 1)  # cells 0..M-1
    diag = flux.copy()
    diag[1:] += flux[:-1]
    diag -= src
    off = -flux[:-1]
    rhs = np.zeros(M)
    rhs[-1] = flux[-1]
    # LDL^T of the symmetric tridiagonal matrix
    piv = np.empty(M)
    y = np.empty(M)
    piv[0] = diag[0]
    y[0] = rhs[0]
    for i in range(1, M):
        if piv[i - 1] <= 0:
            break
        l = off[i - 1] / piv[i - 1]
        piv[i] = diag[i] - l * off[i - 1]
        y[i] = rhs[i] - l * y[i - 1]
    else:
        if piv[-1] > 0:
            u = np.empty(M + 1)
            u[M] = 1.0
            u[M - 1] = y[M - 1] / piv[M - 1]
            for i in range(M - 2, -1, -1):
                u[i] = (y[i] - off[i] * u[i + 1]) / piv[i]
            if np.all(u > 0):
                return RadialProfile(r, u, _derivative(r, u), True, {"min_pivot": float(piv.min())})
    nan = np.full(M + 1, np.nan)
    return RadialProfile(r, nan, nan, False, {"min_pivot": float(np.nanmin(piv[:i])) if M > 1 else float(piv[0])})


def log_transform(u: RadialProfile) -> RadialProfile:
    """``v = log u`` with ``v' = u'/u``."""
    if not u.exists or not np.all(u.values > 0):
        raise DomainError("log transform needs a strictly positive profile")
    v = np.log(u.values)
    v[-1] = np.log(u.values[-1]) if u.values[-1] != 1.0 else 0.0
    return RadialProfile(u.grid, v, u.derivative / u.values, True, dict(u.meta))


def radial_green_potential(d: dom.BallDomain, grid, F, q_profile=None) -> np.ndarray:
    """``∫ G_rad(r, s) (F(s) + q(s)) s^{n-1} |S^{n-1}| ds`` on the grid.

    ``G_rad(r, s) = c_n (max(r, s)^{2-n} - R^{2-n})`` is the spherical mean
    of the ball Green function; ``F`` is sampled on the grid and integrated
    by the trapezoid rule, the density part ``q`` exactly.
    """
    n, R = d.dim, d.radius
    r = np.asarray(grid, dtype=float)
    k = 1.0 / (n - 2)  # c_n |S^{n-1}|
    inner = cumulative_trapezoid(F * r ** (n - 1), r, initial=0.0)  # ∫_0^r F s^{n-1}
    outer_c = cumulative_trapezoid(F * r, r, initial=0.0)  # ∫_0^r F s
    outer = outer_c[-1] - outer_c  # ∫_r^R F s
    if q_profile is not None:
        q = as_density(q_profile, d)
        inner = inner + np.concatenate([[0.0], np.cumsum(q.moments(r, n - 1))])
        qs = np.concatenate([[0.0], np.cumsum(q.moments(r, 1))])
        outer = outer + (qs[-1] - qs)
    total = inner[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        near = np.where(r > 0, r ** (2.0 - n) * inner, 0.0)
    return k * (near + outer - R ** (2.0 - n) * total)


def riccati_residual(d: dom.BallDomain, v: RadialProfile, q_profile) -> float:
    """``||v - G(|v'|^2 + q)||_∞ / (1 + ||v||_∞)`` with the radial Green kernel."""
    w = radial_green_potential(d, v.grid, v.derivative**2, q_profile)
    return float(np.max(np.abs(v.values - w)) / (1.0 + np.max(np.abs(v.values))))


@dataclass(frozen=True)
class SupersolutionResult:
    passed: bool
    margin: float


def supersolution_check(d: dom.BallDomain, op, v_values, tol: float = 1e-10) -> SupersolutionResult:
    """Check ``e^v >= T e^v + 1`` at the nodes.

    ``margin`` is ``min_i (u_i - (T u)_i - 1) / u_i``; the check passes
    when it is at least ``-tol``.
    """
    from .operator import apply

    v = np.asarray(v_values, dtype=float)
    if v.shape != (op.size,):
        raise UsageError(f"v has shape {v.shape}; expected ({op.size},)")
    if not np.all(np.isfinite(v)) or np.any(v < 0):
        raise DomainError("v must be finite and nonnegative")
    u = np.exp(v)
    margin = float(np.min((u - apply(op, u) - 1.0) / u))
    return SupersolutionResult(margin >= -tol, margin)


__all__ = ["RadialProfile", "RadialDensity", "SupersolutionResult", "radial_gauge_ode", "log_transform",
           "radial_green_potential", "riccati_residual", "supersolution_check"]
