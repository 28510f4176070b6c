"""Discrete representations of the potential measure and derived measures.

A :class:`MeasureSpec` is declarative (a density profile or a list of
atoms); :func:`discretize` turns it into a :class:`DiscreteMeasure` by
product quadrature, Gauss-Legendre in the radius times a sphere rule in
the direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy import special

from .domain import BallDomain, smoothed_apply, unit_ball_volume, unit_sphere_area, unit_sphere_rule
from .errors import DataError, DomainError, ValidationError

PROFILES = ("constant", "linear", "bump")


def profile_polynomial(profile: str, amplitude: float, r0: float, r1: float) -> Polynomial:
    """Radial density on ``[r0, r1]`` as a polynomial in r.

    ``constant`` is flat, ``linear`` decays to 0 at ``r1``, ``bump`` is
    ``(1 - s^2)^2`` in the centered variable ``s`` and vanishes at both ends.
    """
    if profile == "constant":
        return Polynomial([amplitude])
    if profile == "linear":
        return amplitude * Polynomial([r1, -1.0]) / (r1 - r0)
    if profile == "bump":
        s = Polynomial([-(r0 + r1), 2.0]) / (r1 - r0)
        return amplitude * (1.0 - s**2) ** 2
    raise ValidationError(f"unknown radial profile {profile!r}; expected one of {PROFILES}", "profile")


@dataclass(frozen=True)
class MeasureSpec:
    """Declarative description of the potential measure.

    Use the constructors :meth:`radial`, :meth:`uniform_ball` and
    :meth:`from_atoms` rather than filling fields by hand.
    """

    kind: str
    profile: str = "constant"
    amplitude: float = 0.0
    support: tuple = (0.0, 0.0)
    center: tuple | None = None
    radius: float = 0.0
    density: float = 0.0
    atoms: tuple = ()

    @classmethod
    def radial(cls, profile: str, amplitude: float, support: Sequence[float]) -> "MeasureSpec":
        return cls("radial_density", profile=profile, amplitude=float(amplitude),
                   support=tuple(float(s) for s in support))

    @classmethod
    def uniform_ball(cls, center, radius: float, density: float) -> "MeasureSpec":
        return cls("uniform_ball_density", center=tuple(float(c) for c in center),
                   radius=float(radius), density=float(density))

    @classmethod
    def from_atoms(cls, atoms) -> "MeasureSpec":
        return cls("atoms", atoms=tuple((tuple(float(c) for c in p), float(m)) for p, m in atoms))

    def scaled(self, t: float) -> "MeasureSpec":
        """The same measure multiplied by ``t >= 0``."""
        if self.kind == "radial_density":
            return MeasureSpec.radial(self.profile, self.amplitude * t, self.support)
        if self.kind == "uniform_ball_density":
            return MeasureSpec.uniform_ball(self.center, self.radius, self.density * t)
        return MeasureSpec.from_atoms([(p, m * t) for p, m in self.atoms])

    def validate(self, d: BallDomain) -> None:
        if self.kind == "radial_density":
            r0, r1 = self.support
            if not (0.0 <= r0 < r1):
                raise ValidationError(f"radial support must satisfy 0 <= r0 < r1, got {self.support}", "support")
            if r1 >= d.radius:
                raise ValidationError("radial support must stay strictly inside the domain", "support")
            if not (np.isfinite(self.amplitude) and self.amplitude >= 0):
                raise ValidationError("amplitude must be finite and >= 0", "amplitude")
            profile_polynomial(self.profile, 1.0, r0, r1)
        elif self.kind == "uniform_ball_density":
            if self.center is None or len(self.center) != d.dim:
                raise ValidationError("sub-ball center must have the domain dimension", "center")
            if not self.radius > 0:
                raise ValidationError("sub-ball radius must be positive", "radius")
            if np.linalg.norm(np.asarray(self.center) - d.center) + self.radius >= d.radius:
                raise ValidationError("sub-ball must lie strictly inside the domain", "radius")
            if not (np.isfinite(self.density) and self.density >= 0):
                raise ValidationError("density must be finite and >= 0", "density")
        elif self.kind == "atoms":
            if not self.atoms:
                raise ValidationError("atoms list is empty", "atoms")
            for i, (p, m) in enumerate(self.atoms):
                if len(p) != d.dim:
                    raise ValidationError(f"atom {i} has wrong dimension", f"atoms[{i}]")
                if not (np.isfinite(m) and m >= 0):
                    raise ValidationError(f"atom {i} mass must be finite and >= 0", f"atoms[{i}]")
                if d.relative_radius(np.asarray(p)) >= 1.0:
                    raise ValidationError(f"atom {i} is not strictly interior", f"atoms[{i}]")
        else:
            raise ValidationError(f"unknown measure kind {self.kind!r}", "kind")

    def analytic_mass(self, d: BallDomain) -> float:
        """Exact total mass, by polynomial antiderivatives (no quadrature)."""
        if self.kind == "radial_density":
            r0, r1 = self.support
            poly = profile_polynomial(self.profile, self.amplitude, r0, r1)
            integrand = (poly * Polynomial([0.0] * (d.dim - 1) + [1.0])).integ()
            return unit_sphere_area(d.dim) * float(integrand(r1) - integrand(r0))
        if self.kind == "uniform_ball_density":
            return self.density * unit_ball_volume(d.dim) * self.radius**d.dim
        return float(sum(m for _, m in self.atoms))


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finite weighted point set standing in for a measure on the ball.

    ``cell_radii[i]`` is the radius of the ball with the same volume as the
    quadrature cell of node i (0 for atoms).  ``smoothing_radii[i]`` is the
    radius inside which the operator averages the Riesz singularity around
    node i; it defaults to ``cell_radii`` and is the larger cell dimension
    for the flat cells of a product rule.  ``diagonal``, when present, holds
    per-node self values of the kernel fixed so that each row of the
    discrete operator reproduces the exact Green potential of the density.
    """

    nodes: np.ndarray
    weights: np.ndarray
    cell_radii: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)
    smoothing_radii: np.ndarray | None = None
    diagonal: np.ndarray | None = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 2:
            raise ValidationError("nodes must be a 2-D array")
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        radii = np.asarray(self.cell_radii, dtype=float).reshape(-1)
        if not (len(weights) == len(radii) == len(nodes)):
            raise ValidationError("nodes, weights and cell_radii must have equal length")
        if np.any(~np.isfinite(weights)) or np.any(weights < 0):
            raise DataError("weights must be finite and nonnegative")
        smooth = radii.copy() if self.smoothing_radii is None else np.asarray(self.smoothing_radii, dtype=float).reshape(-1)
        if len(smooth) != len(radii):
            raise ValidationError("smoothing_radii must match the node count")
        diag = None if self.diagonal is None else np.asarray(self.diagonal, dtype=float).reshape(-1)
        if diag is not None and len(diag) != len(radii):
            raise ValidationError("diagonal must match the node count")
        for arr in (nodes, weights, radii, smooth) + ((diag,) if diag is not None else ()):
            arr.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "cell_radii", radii)
        object.__setattr__(self, "smoothing_radii", smooth)
        object.__setattr__(self, "diagonal", diag)

    def reweighted(self, weights, meta=None) -> "DiscreteMeasure":
        """Same nodes and cells with new weights."""
        return DiscreteMeasure(self.nodes, weights, self.cell_radii, dict(self.meta) if meta is None else meta,
                               self.smoothing_radii, self.diagonal)

    def subset(self, keep) -> "DiscreteMeasure":
        """Nodes selected by a boolean mask, cells and self values kept."""
        keep = np.asarray(keep, dtype=bool)
        return DiscreteMeasure(self.nodes[keep], self.weights[keep], self.cell_radii[keep], dict(self.meta),
                               self.smoothing_radii[keep], None if self.diagonal is None else self.diagonal[keep])

    def __len__(self):
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def mass(self) -> float:
        return float(np.sum(self.weights))

    @property
    def degenerate(self) -> bool:
        """True for the zero-node measure left by an empty restriction."""
        return len(self.weights) == 0

    @property
    def atomic(self) -> np.ndarray:
        """Mask of nodes that are genuine point masses (zero cell, positive weight)."""
        return (self.cell_radii == 0.0) & (self.weights > 0.0)


def _radial_product(d: BallDomain, center, r0, r1, density: Callable, n_r, n_ang, rule):
    t, wt = special.roots_legendre(n_r)
    r = 0.5 * (r1 - r0) * t + 0.5 * (r1 + r0)
    width = 0.5 * (r1 - r0) * wt
    dirs, wa = unit_sphere_rule(d.dim, n_ang, rule)
    nodes = (np.asarray(center)[None, None, :] + r[:, None, None] * dirs[None, :, :]).reshape(-1, d.dim)
    cell_vol = (width[:, None] * r[:, None] ** (d.dim - 1) * wa[None, :]).ravel()
    weights = np.repeat(density(r), len(wa)) * cell_vol
    radii = (cell_vol / unit_ball_volume(d.dim)) ** (1.0 / d.dim)
    # product cells are flat: radial width against tangential extent
    tangential = r[:, None] * wa[None, :] ** (1.0 / (d.dim - 1))
    smooth = np.maximum(width[:, None], tangential).ravel()
    return nodes, weights, radii, smooth


def node_count(spec: MeasureSpec, d: BallDomain, resolution=(16, 64), rule: str = "gauss") -> int:
    """Number of nodes :func:`discretize` would produce, without building them."""
    if spec.kind == "atoms":
        return len(spec.atoms)
    n_r, n_ang = (int(v) for v in resolution)
    return n_r * len(unit_sphere_rule(d.dim, n_ang, rule)[1])


def discretize(spec: MeasureSpec, d: BallDomain, resolution=(16, 64), rule: str = "gauss",
               self_values: bool = True) -> DiscreteMeasure:
    """Quadrature discretization of ``spec`` on ``d``.

    Parameters
    ----------
    resolution : (int, int)
        Radial Gauss-Legendre order and angular node count (the angular
        count is rounded to the product grid for ``rule="gauss"``).
    rule : {"gauss", "spiral"}
        Sphere rule for the directions.
    self_values : bool
        For densities, fix the kernel diagonal from the exact Green
        potential (one matrix-free pass over the nodes).  Otherwise the
        operator falls back to the ball-averaged diagonal.
    """
    spec.validate(d)
    n_r, n_ang = (int(v) for v in resolution)
    if n_r < 1 or n_ang < 1:
        raise ValidationError("resolution entries must be positive", "resolution")
    meta = {"kind": spec.kind, "resolution": [n_r, n_ang], "rule": rule}
    if spec.kind == "atoms":
        pts = np.array([p for p, _ in spec.atoms], dtype=float)
        mass = np.array([m for _, m in spec.atoms], dtype=float)
        return DiscreteMeasure(pts, mass, np.zeros(len(mass)), meta)
    # discretize the unit-amplitude shape, then scale
    if spec.kind == "radial_density":
        r0, r1 = spec.support
        unit = MeasureSpec.radial(spec.profile, 1.0, spec.support)
        poly = profile_polynomial(spec.profile, 1.0, r0, r1)
        nodes, w, radii, smooth = _radial_product(d, d.center, r0, r1, poly, n_r, n_ang, rule)
        amp = spec.amplitude
    else:
        unit = MeasureSpec.uniform_ball(spec.center, spec.radius, 1.0)
        nodes, w, radii, smooth = _radial_product(
            d, spec.center, 0.0, spec.radius, lambda r: np.ones_like(r), n_r, n_ang, rule
        )
        amp = spec.density
    diag = None
    if self_values:
        diag = _row_sum_diagonal(d, unit, nodes, w, smooth)
        meta["diagonal_clipped"] = int(np.sum(diag <= 0.0))
    return DiscreteMeasure(nodes, amp * w, radii, meta, smooth, diag)


def _row_sum_diagonal(d: BallDomain, unit: MeasureSpec, nodes, w, smooth):
    # K_ii w_i + sum_{j != i} K_ij w_j = exact potential at x_i
    from .potential import spec_potential

    exact = spec_potential(unit, d, nodes)
    off = smoothed_apply(d, nodes, smooth, w)
    with np.errstate(divide="ignore", invalid="ignore"):
        diag = np.where(w > 0, (exact - off) / w, 0.0)
    return np.maximum(diag, 0.0)


def weight_by(mu: DiscreteMeasure, g) -> DiscreteMeasure:
    """Same nodes and cells, weights multiplied by ``g(node)``.

    ``g`` is a callable on the ``(N, n)`` node array or an array of node
    values.
    """
    vals = np.asarray(g(mu.nodes) if callable(g) else g, dtype=float)
    vals = np.broadcast_to(vals, mu.weights.shape)
    if not np.all(np.isfinite(vals)):
        raise DataError("weighting function is not finite at every node")
    if np.any(vals < 0):
        raise DataError("weighting function must be nonnegative")
    return mu.reweighted(mu.weights * vals)


# ---------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class BallRegion:
    """Closed ball ``{|x - center| <= radius}``."""

    center: tuple
    radius: float

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.linalg.norm(pts - np.asarray(self.center), axis=1) <= self.radius

    def volume(self, dim: int) -> float:
        return unit_ball_volume(dim) * self.radius**dim

    def inside(self, d: BallDomain) -> bool:
        return np.linalg.norm(np.asarray(self.center) - d.center) + self.radius < d.radius


@dataclass(frozen=True)
class AnnulusRegion:
    """Closed shell ``{inner <= |x - center| <= outer}``."""

    center: tuple
    inner: float
    outer: float

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        r = np.linalg.norm(pts - np.asarray(self.center), axis=1)
        return (r >= self.inner) & (r <= self.outer)

    def volume(self, dim: int) -> float:
        return unit_ball_volume(dim) * (self.outer**dim - self.inner**dim)

    def inside(self, d: BallDomain) -> bool:
        return np.linalg.norm(np.asarray(self.center) - d.center) + self.outer < d.radius


@dataclass(frozen=True)
class Complement:
    region: object

    def contains(self, points) -> np.ndarray:
        return ~self.region.contains(points)


@dataclass(frozen=True)
class EmptyRegion:
    def contains(self, points) -> np.ndarray:
        return np.zeros(len(np.atleast_2d(points)), dtype=bool)


def restrict(mu: DiscreteMeasure, region) -> DiscreteMeasure:
    """Keep the nodes inside ``region`` (weights are never split)."""
    if len(mu) == 0:
        return mu
    out = mu.subset(region.contains(mu.nodes))
    out.meta["restricted"] = True
    return out


def check_region(region, d: BallDomain) -> None:
    """Raise unless ``region`` is a sub-ball or shell of positive volume inside ``d``."""
    if not isinstance(region, (BallRegion, AnnulusRegion)):
        raise ValidationError("region must be a BallRegion or AnnulusRegion", "region")
    if len(region.center) != d.dim:
        raise DomainError("region center has the wrong dimension")
    if region.volume(d.dim) <= 0:
        raise ValidationError("region has zero volume", "region")
    if isinstance(region, AnnulusRegion) and not (0 <= region.inner < region.outer):
        raise ValidationError("shell radii must satisfy 0 <= inner < outer", "region")
    if not region.inside(d):
        raise ValidationError("region must lie strictly inside the domain", "region")
