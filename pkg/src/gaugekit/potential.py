"""Closed-form Green potentials of the model densities.

``G rho(x) = ∫ G(x, y) rho(y) dy`` for a uniform density on a sub-ball or
shell and for a radial density centered at the ball center.  These feed
the diagonal of the discretized operator and ``G chi_K``.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial

from . import domain as dom
from .errors import UsageError


class RadialDensity:
    """Radial density with cell moments ``∫_a^b q(s) s^k ds``.

    Either a list of polynomial pieces ``(a, b, poly)`` (moments exact) or a
    callable (8-point Gauss-Legendre per cell, split at ``breaks``).
    """

    def __init__(self, pieces=None, func: Callable | None = None, breaks=()):
        self._pieces = list(pieces or [])
        self._func = func
        self._breaks = tuple(sorted(breaks))

    @classmethod
    def from_spec(cls, spec, d: dom.BallDomain | None = None) -> "RadialDensity":
        from .measure import profile_polynomial

        if spec.kind == "radial_density":
            r0, r1 = spec.support
            return cls([(r0, r1, profile_polynomial(spec.profile, spec.amplitude, r0, r1))])
        if spec.kind == "uniform_ball_density":
            if d is not None and np.any(np.asarray(spec.center) != d.center):
                raise UsageError("uniform ball density must be centered at the domain center")
            return cls([(0.0, spec.radius, Polynomial([spec.density]))])
        raise UsageError(f"measure of kind {spec.kind!r} has no radial density")

    @classmethod
    def zero(cls) -> "RadialDensity":
        return cls([])

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self._func is not None:
            return np.asarray(self._func(r), dtype=float) * np.ones_like(r)
        out = np.zeros_like(r)
        for a, b, p in self._pieces:
            out = out + np.where((r >= a) & (r <= b), p(r), 0.0)
        return out

    def cumulative(self, r, power: int) -> np.ndarray:
        """``∫_0^r q(s) s^power ds`` for each entry of ``r``."""
        r = np.asarray(r, dtype=float)
        if self._func is not None:
            flat = np.sort(np.unique(np.concatenate([[0.0], r.ravel()])))
            cum = np.concatenate([[0.0], np.cumsum(self.moments(flat, power))])
            return np.interp(r, flat, cum)
        out = np.zeros_like(r)
        for a, b, p in self._pieces:
            prim = (p * Polynomial([0.0] * power + [1.0])).integ()
            out = out + prim(np.clip(r, a, b)) - prim(a)
        return out

    def moments(self, edges, power: int) -> np.ndarray:
        """``∫ q(s) s^power ds`` over each ``[edges[i], edges[i+1]]``."""
        edges = np.asarray(edges, dtype=float)
        if self._func is None:
            return np.diff(self.cumulative(edges, power))
        out = np.zeros(len(edges) - 1)
        xg, wg = np.polynomial.legendre.leggauss(8)
        inner = [b for b in self._breaks if edges[0] < b < edges[-1]]
        cuts = np.unique(np.concatenate([edges, inner]))
        a, b = cuts[:-1], cuts[1:]
        s = 0.5 * (b - a)[:, None] * (xg + 1.0) + a[:, None]
        vals = (self(s) * s**power) @ wg * 0.5 * (b - a)
        np.add.at(out, np.searchsorted(edges, a, side="right") - 1, vals)
        return out


def as_density(q, d=None) -> RadialDensity:
    from .measure import MeasureSpec

    if isinstance(q, RadialDensity):
        return q
    if isinstance(q, MeasureSpec):
        return RadialDensity.from_spec(q, d)
    if q is None or (np.isscalar(q) and q == 0):
        return RadialDensity.zero()
    if callable(q):
        return RadialDensity(func=q)
    raise UsageError("expected a RadialDensity, a radial MeasureSpec or a callable")


def radial_potential(d: dom.BallDomain, q, x) -> np.ndarray:
    """Green potential of a radial density centered at the ball center.

    Uses the spherical mean ``G_rad(r, s) = c_n (max(r, s)^{2-n} - R^{2-n})``.
    """
    q = as_density(q, d)
    n, R = d.dim, d.radius
    r = np.linalg.norm(np.atleast_2d(x) - d.center, axis=1)
    inner = q.cumulative(r, n - 1)
    total = q.cumulative(np.array([R]), n - 1)[0]
    outer = q.cumulative(np.array([R]), 1)[0] - q.cumulative(r, 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        near = np.where(r > 0, r ** (2.0 - n) * inner, 0.0)
    return (near + outer - R ** (2.0 - n) * total) / (n - 2)


def newton_ball(dim: int, center, radius: float, x) -> np.ndarray:
    """Newtonian potential ``∫_B c_n |x - y|^{2-n} dy`` of the unit-density ball."""
    r = np.linalg.norm(np.atleast_2d(x) - np.asarray(center, dtype=float), axis=1)
    inside = radius**2 / (2.0 * (dim - 2)) - r**2 / (2.0 * dim)
    with np.errstate(divide="ignore"):
        outside = radius**dim / (dim * (dim - 2)) * r ** (2.0 - dim)
    return np.where(r <= radius, inside, outside)


def image_term(d: dom.BallDomain, x, y) -> np.ndarray:
    """``H(x, y) = c_n |x - y|^{2-n} - G(x, y)``, smooth in the closed ball."""
    xs = d.scaled(np.atleast_2d(x))
    ys = d.scaled(np.atleast_2d(y))
    q = np.sum((xs - ys) ** 2, axis=-1) + (1 - np.sum(xs**2, axis=-1)) * (1 - np.sum(ys**2, axis=-1))
    return dom.green_constant(d.dim) * d.radius ** (2 - d.dim) * q ** ((2.0 - d.dim) / 2.0)


def ball_potential(d: dom.BallDomain, center, radius: float, x) -> np.ndarray:
    """``∫_{B(center, radius)} G(x, y) dy``.

    ``H(x, .)`` is harmonic on the ball, so its mean over the sub-ball is its
    value at the sub-ball center.
    """
    xs = np.atleast_2d(x)
    vol = dom.unit_ball_volume(d.dim) * radius**d.dim
    c = np.broadcast_to(np.asarray(center, dtype=float), xs.shape)
    return newton_ball(d.dim, center, radius, xs) - vol * image_term(d, xs, c)


def spec_potential(spec, d: dom.BallDomain, x) -> np.ndarray | None:
    """Exact Green potential of a density :class:`MeasureSpec`, or ``None`` for atoms."""
    if spec.kind == "uniform_ball_density":
        return spec.density * ball_potential(d, spec.center, spec.radius, x)
    if spec.kind == "radial_density":
        return radial_potential(d, RadialDensity.from_spec(spec, d), x)
    return None
