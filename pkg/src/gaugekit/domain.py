"""Ball domains in R^n (n >= 3) and their closed-form kernels.

Every downstream module talks to the geometry only through
:func:`green`, :func:`poisson`, :func:`martin` and :func:`modifier_m`
(and their ``*_matrix`` block forms), so another domain type with the
same surface could be dropped in later.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import gamma, pi

import numpy as np
from scipy import special

from . import _backend, _core_py
from .errors import DataError, DomainError, ValidationError

#: Relative radius error allowed for a point to count as "on the sphere".
BOUNDARY_RTOL = 1e-9


def unit_sphere_area(dim: int) -> float:
    """Surface area of the unit sphere S^{n-1} in R^n."""
    return 2.0 * pi ** (dim / 2.0) / gamma(dim / 2.0)


def unit_ball_volume(dim: int) -> float:
    return unit_sphere_area(dim) / dim


def green_constant(dim: int) -> float:
    """``c_n = 1 / ((n - 2) |S^{n-1}|)``, so that ``-Δ (c_n |x|^{2-n}) = δ``."""
    return 1.0 / ((dim - 2) * unit_sphere_area(dim))


@dataclass(frozen=True, eq=False)
class BallDomain:
    """Open ball ``B(center, radius)`` in R^n with Martin reference point ``x0``."""

    dim: int
    center: np.ndarray
    radius: float = 1.0
    x0: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 3:
            raise ValidationError(f"dim must be an integer >= 3, got {self.dim}", "dim")
        center = np.array(self.center, dtype=float).reshape(-1)
        if center.shape != (self.dim,) or not np.all(np.isfinite(center)):
            raise ValidationError("center must be a finite vector of length dim", "center")
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ValidationError("radius must be positive", "radius")
        x0 = center.copy() if self.x0 is None else np.array(self.x0, dtype=float).reshape(-1)
        if x0.shape != (self.dim,) or not np.all(np.isfinite(x0)):
            raise ValidationError("x0 must be a finite vector of length dim", "x0")
        if np.linalg.norm(x0 - center) >= self.radius:
            raise ValidationError("x0 must lie strictly inside the ball", "x0")
        center.setflags(write=False)
        x0.setflags(write=False)
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "x0", x0)

    @classmethod
    def unit(cls, dim: int = 3) -> "BallDomain":
        return cls(dim, np.zeros(dim), 1.0)

    @property
    def surface_area(self) -> float:
        return unit_sphere_area(self.dim) * self.radius ** (self.dim - 1)

    @property
    def volume(self) -> float:
        return unit_ball_volume(self.dim) * self.radius**self.dim

    def scaled(self, points) -> np.ndarray:
        """Map points to unit-ball coordinates ``(p - center) / radius``."""
        pts = np.asarray(points, dtype=float)
        if pts.shape[-1] != self.dim:
            raise DomainError(f"points must have last axis {self.dim}, got shape {pts.shape}")
        return (pts - self.center) / self.radius

    def relative_radius(self, points) -> np.ndarray:
        return np.linalg.norm(self.scaled(points), axis=-1)

    def check_interior(self, points, closed=False) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if not np.all(np.isfinite(pts)):
            raise DomainError("points must be finite")
        rho = self.relative_radius(pts)
        bad = rho > 1.0 + 1e-12 if closed else rho >= 1.0
        if np.any(bad):
            where = "outside the closed ball" if closed else "not strictly interior"
            raise DomainError(f"{int(np.sum(bad))} point(s) {where}")
        return pts

    def check_boundary(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        rho = self.relative_radius(pts)
        if np.any(np.abs(rho - 1.0) > BOUNDARY_RTOL):
            raise DomainError("boundary point is off the sphere beyond tolerance")
        return pts

    def inward_normal(self, z) -> np.ndarray:
        z = self.check_boundary(z)
        return -(z - self.center) / np.linalg.norm(z - self.center, axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# kernels


def green(d: BallDomain, x, y) -> np.ndarray:
    """Ball Green function ``G(x, y)``, broadcasting over leading axes.

    Returns ``inf`` on the diagonal and 0 when either point is on the sphere.
    """
    xs = d.scaled(d.check_interior(x, closed=True))
    ys = d.scaled(d.check_interior(y, closed=True))
    xs, ys = np.broadcast_arrays(xs, ys)
    diff = xs - ys
    d2 = np.einsum("...k,...k->...", diff, diff)
    eps = (1.0 - np.einsum("...k,...k->...", xs, xs)) * (1.0 - np.einsum("...k,...k->...", ys, ys))
    eps = np.maximum(eps, 0.0)
    g = _core_py._stable_green(np.atleast_1d(d2), np.atleast_1d(eps), d.dim - 2)
    g = g.reshape(np.shape(d2))
    return green_constant(d.dim) * d.radius ** (2 - d.dim) * g


def green_matrix(d: BallDomain, xs, ys) -> np.ndarray:
    """Dense block ``G(xs[i], ys[j])`` through the compiled backend."""
    a = d.scaled(d.check_interior(np.atleast_2d(xs), closed=True))
    b = d.scaled(d.check_interior(np.atleast_2d(ys), closed=True))
    return green_constant(d.dim) * d.radius ** (2 - d.dim) * _backend.green_block(a, b, d.dim)


def green_apply(d: BallDomain, xs, ys, coef) -> np.ndarray:
    """``sum_j G(xs[i], ys[j]) coef[j]`` without storing the block."""
    a = d.scaled(d.check_interior(np.atleast_2d(xs), closed=True))
    b = d.scaled(d.check_interior(np.atleast_2d(ys), closed=True))
    scale = green_constant(d.dim) * d.radius ** (2 - d.dim)
    return scale * _backend.green_apply(a, b, coef, d.dim)


def smoothed_matrix(d: BallDomain, xs, rho) -> np.ndarray:
    """Node-to-node Green block with the near field averaged over balls.

    Pairs closer than ``max(rho_i, rho_j)`` use the mean of the Riesz part
    over that ball (continuous with ``G`` at the radius); the diagonal is 0.
    """
    a = d.scaled(d.check_interior(np.atleast_2d(xs), closed=True))
    scale = green_constant(d.dim) * d.radius ** (2 - d.dim)
    return scale * _backend.smoothed_block(a, np.asarray(rho, dtype=float) / d.radius, d.dim)


def smoothed_apply(d: BallDomain, xs, rho, coef) -> np.ndarray:
    """Matrix-free product with :func:`smoothed_matrix`."""
    a = d.scaled(d.check_interior(np.atleast_2d(xs), closed=True))
    scale = green_constant(d.dim) * d.radius ** (2 - d.dim)
    return scale * _backend.smoothed_apply(a, np.asarray(rho, dtype=float) / d.radius, coef, d.dim)


def smoothed_cross(d: BallDomain, xs, ys, rho) -> np.ndarray:
    """``G(xs[i], ys[j])`` with the Riesz part averaged over ``B(ys[j], rho[j])`` when inside it."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    a = d.scaled(d.check_interior(xs, closed=True))
    b = d.scaled(d.check_interior(ys, closed=True))
    r = np.asarray(rho, dtype=float) / d.radius
    out = np.empty((len(a), len(b)))
    for start in range(0, len(a), 512):
        stop = min(start + 512, len(a))
        d2, eps = _core_py._pair_terms(a[start:stop], b)
        rr = np.broadcast_to(r[None, :], d2.shape)
        out[start:stop] = _core_py._smoothed_terms(d2, eps, rr, d.dim - 2, d.dim)
    return green_constant(d.dim) * d.radius ** (2 - d.dim) * out


def green_image_diagonal(d: BallDomain, x) -> np.ndarray:
    """Regular (image) part of ``G`` at coincidence, ``H(x, x)``.

    ``G(x, y) = c_n |x - y|^{2-n} - H(x, y)`` with
    ``H(x, x) = c_n R^{2-n} (1 - |x'|^2)^{2-n}`` in scaled coordinates.
    """
    xs = d.scaled(x)
    rho2 = np.einsum("...k,...k->...", xs, xs)
    return green_constant(d.dim) * d.radius ** (2 - d.dim) * (1.0 - rho2) ** (2 - d.dim)


def poisson(d: BallDomain, x, z) -> np.ndarray:
    """``P(x, z) = (R^2 - |x - c|^2) / (|S^{n-1}| R |x - z|^n)``, broadcasting."""
    x = d.check_interior(x)
    z = d.check_boundary(z)
    r2 = np.sum((x - d.center) ** 2, axis=-1)
    dist = np.linalg.norm(np.asarray(x) - np.asarray(z), axis=-1)
    return (d.radius**2 - r2) / (unit_sphere_area(d.dim) * d.radius * dist**d.dim)


def poisson_matrix(d: BallDomain, xs, zs) -> np.ndarray:
    xs = d.check_interior(np.atleast_2d(xs))
    zs = d.check_boundary(np.atleast_2d(zs))
    blk = _backend.poisson_block(d.scaled(xs), d.scaled(zs), d.dim)
    return blk / (unit_sphere_area(d.dim) * d.radius ** (d.dim - 1))


def martin(d: BallDomain, x, z) -> np.ndarray:
    """Martin kernel ``M(x, z) = P(x, z) / P(x0, z)``; exactly 1 at ``x = x0``."""
    return poisson(d, x, z) / poisson(d, d.x0, z)


def martin_matrix(d: BallDomain, xs, zs) -> np.ndarray:
    zs = np.atleast_2d(zs)
    return poisson_matrix(d, xs, zs) / poisson_matrix(d, d.x0, zs)


def modifier_m(d: BallDomain, x) -> np.ndarray:
    """``m(x) = min(1, G(x, x0))``; equals 1 at ``x = x0``."""
    g = green(d, x, d.x0)
    return np.minimum(1.0, g)


# ---------------------------------------------------------------------------
# sphere quadrature


@dataclass(frozen=True, eq=False)
class SphereQuadrature:
    """Nodes on the domain's boundary sphere with positive surface weights."""

    nodes: np.ndarray
    weights: np.ndarray
    rule: str = "gauss"
    directions: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]

    def __len__(self):
        return len(self.weights)

    @property
    def total(self) -> float:
        return float(np.sum(self.weights))


def _inverse_sin_power_cdf(u, power):
    # theta with density proportional to sin(theta)^power on [0, pi]
    a = 0.5 * (power + 1.0)
    t = special.betaincinv(a, a, u)
    return np.arccos(1.0 - 2.0 * t)


def _angles_to_cartesian(thetas, phi):
    # thetas: list of arrays for polar angles theta_1..theta_{n-2}
    cols = []
    sprod = np.ones_like(phi)
    for th in thetas:
        cols.append(sprod * np.cos(th))
        sprod = sprod * np.sin(th)
    cols.append(sprod * np.cos(phi))
    cols.append(sprod * np.sin(phi))
    return np.stack(cols, axis=-1)


@lru_cache(maxsize=64)
def _unit_rule(dim: int, count: int, rule: str):
    if rule == "gauss":
        m = max(2, int(round((count / 2.0) ** (1.0 / (dim - 1)))))
        axes, wts = [], []
        for k in range(dim - 2):
            power = dim - 2 - k
            alpha = 0.5 * (power - 1.0)
            t, w = special.roots_jacobi(m, alpha, alpha)
            axes.append(np.arccos(t))
            wts.append(w)
        mphi = 2 * m
        axes.append(2.0 * pi * (np.arange(mphi) + 0.5) / mphi)
        wts.append(np.full(mphi, 2.0 * pi / mphi))
        grids = np.meshgrid(*axes, indexing="ij")
        wgrid = np.ones_like(grids[0])
        for k, w in enumerate(wts):
            shape = [1] * len(wts)
            shape[k] = -1
            wgrid = wgrid * w.reshape(shape)
        dirs = _angles_to_cartesian([g.ravel() for g in grids[:-1]], grids[-1].ravel())
        weights = wgrid.ravel()
    elif rule == "spiral":
        # Kronecker lattice pushed through the inverse angular CDFs; for
        # n = 3 this is the golden-section spiral.
        if count < 1:
            raise ValidationError("sphere node count must be positive")
        k = np.arange(count)
        if dim == 3:
            us = [(k + 0.5) / count]
            phi = 2.0 * pi * np.mod(k * (3.0 - np.sqrt(5.0)) / 2.0, 1.0)
        else:
            # generalized golden ratio: root of g^dim = g + 1
            g = 1.0
            for _ in range(64):
                g = (1.0 + g) ** (1.0 / dim)
            us = [np.mod(0.5 + (k + 1) * g ** -(j + 1), 1.0) for j in range(dim - 2)]
            phi = 2.0 * pi * np.mod(0.5 + (k + 1) * g ** -(dim - 1), 1.0)
        thetas = [_inverse_sin_power_cdf(u, dim - 2 - j) for j, u in enumerate(us)]
        dirs = _angles_to_cartesian(thetas, phi)
        weights = np.full(count, unit_sphere_area(dim) / count)
    else:
        raise ValidationError(f"unknown sphere rule {rule!r}", "sphere_rule")
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    dirs.setflags(write=False)
    weights.setflags(write=False)
    return dirs, weights


def unit_sphere_rule(dim: int, count: int, rule: str = "gauss"):
    """Directions on S^{n-1} and weights summing to ``|S^{n-1}|``.

    ``rule="gauss"`` is a product of Gauss-Jacobi rules in the polar
    angles and the periodic trapezoid rule in azimuth (spectrally
    accurate for smooth integrands, node count rounded to the product
    grid). ``rule="spiral"`` gives ``count`` equal-area points with equal
    weights.
    """
    return _unit_rule(int(dim), int(count), str(rule))


def sphere_quadrature(d: BallDomain, count: int, rule: str = "gauss") -> SphereQuadrature:
    dirs, w = unit_sphere_rule(d.dim, count, rule)
    nodes = d.center + d.radius * dirs
    # Snap onto the sphere to well below the boundary tolerance.
    nodes = d.center + d.radius * (nodes - d.center) / np.linalg.norm(
        nodes - d.center, axis=1, keepdims=True
    )
    return SphereQuadrature(nodes, w * d.radius ** (d.dim - 1), rule, dirs)


def harmonic_measure_weights(d: BallDomain, q: SphereQuadrature, x=None) -> np.ndarray:
    """Weights of ``dH^x`` on the quadrature nodes (``x = x0`` by default)."""
    x = d.x0 if x is None else np.asarray(x, dtype=float)
    return poisson_matrix(d, x, q.nodes)[0] * q.weights


def _node_values(f, q: SphereQuadrature) -> np.ndarray:
    if hasattr(f, "node_values"):
        vals = f.node_values(q)
    elif callable(f):
        vals = np.asarray(f(q.nodes), dtype=float)
    else:
        vals = np.broadcast_to(np.asarray(f, dtype=float), (len(q),))
    vals = np.asarray(vals, dtype=float)
    if vals.shape != (len(q),):
        raise DataError(f"boundary data has shape {vals.shape}, expected ({len(q)},)")
    if not np.all(np.isfinite(vals)):
        raise DataError("boundary data is not finite at every quadrature node")
    if np.any(vals < 0):
        raise DataError("boundary data must be nonnegative")
    return vals


def harmonic_extension(d: BallDomain, f, x, q: SphereQuadrature, form: str = "poisson") -> np.ndarray:
    """Harmonic extension ``Pf(x)`` by boundary quadrature.

    Parameters
    ----------
    f : BoundaryData, callable or array
        Nonnegative boundary values; a callable receives the node array.
    x : (..., n) array_like
        Interior evaluation points.
    form : {"poisson", "martin"}
        ``sum f P(x, z) dσ`` or ``sum M(x, z) f dH^{x0}``; the two agree to
        rounding.
    """
    vals = _node_values(f, q)
    xs = np.atleast_2d(np.asarray(x, dtype=float))
    if form == "poisson":
        out = poisson_matrix(d, xs, q.nodes) @ (vals * q.weights)
    elif form == "martin":
        out = martin_matrix(d, xs, q.nodes) @ (vals * harmonic_measure_weights(d, q))
    else:
        raise ValueError(f"unknown form {form!r}")
    return out if np.ndim(x) > 1 else out[0]
