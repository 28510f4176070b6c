"""Balayage of the potential to the boundary and the existence criteria.

``M*(mω)(z) = ∫ M(x, z) m(x) dω(x)`` drives everything here: a positive
solution with boundary data f exists when ``||T|| < 1`` and
``∫ exp(C M*(mω)) f dH^{x0}`` is finite, and fails to exist when
``||T|| > 1`` or the integral with ``C = 1`` diverges.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import domain as dom
from . import operator as opm
from .errors import ConvergenceError, DataError, UsageError, ValidationError
from .measure import DiscreteMeasure, weight_by

log = logging.getLogger(__name__)

#: ``||T||`` must exceed ``1 + NONEXISTENCE_MARGIN`` for a Schur-type verdict.
NONEXISTENCE_MARGIN = 1e-6
VERDICTS = ("exists_certified", "nonexistence_certified", "inconclusive")


@dataclass(frozen=True)
class BoundaryData:
    """Boundary function f (``constant`` / ``function``) or boundary measure (``atoms``).

    ``function`` values are aligned with the nodes of a sphere quadrature;
    ``atoms`` hold boundary points and masses of a Martin representing
    measure.
    """

    kind: str
    value: float = 0.0
    values: tuple = ()
    points: tuple = ()
    masses: tuple = ()

    def __post_init__(self):
        if self.kind == "constant":
            vals = np.array([self.value])
        elif self.kind == "function":
            vals = np.asarray(self.values, dtype=float)
        elif self.kind == "atoms":
            vals = np.asarray(self.masses, dtype=float)
            if len(self.points) != len(vals):
                raise ValidationError("atom points and masses differ in length", "masses")
        else:
            raise ValidationError(f"unknown boundary data kind {self.kind!r}", "kind")
        if vals.size == 0 or not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise ValidationError("boundary data must be finite and nonnegative", "values")
        if not np.any(vals > 0):
            raise ValidationError("boundary data must be positive somewhere", "values")

    @classmethod
    def constant(cls, value: float = 1.0) -> "BoundaryData":
        return cls("constant", value=float(value))

    @classmethod
    def on_nodes(cls, values) -> "BoundaryData":
        return cls("function", values=tuple(float(v) for v in np.ravel(values)))

    @classmethod
    def from_function(cls, func, q: dom.SphereQuadrature) -> "BoundaryData":
        return cls.on_nodes(np.asarray(func(q.nodes), dtype=float))

    @classmethod
    def atoms(cls, points, masses) -> "BoundaryData":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return cls("atoms", points=tuple(map(tuple, pts)), masses=tuple(float(m) for m in np.ravel(masses)))

    @classmethod
    def harmonic_measure(cls, d: dom.BallDomain, q: dom.SphereQuadrature) -> "BoundaryData":
        """``dH^{x0}`` as a boundary measure on the quadrature nodes (Martin measure of 1)."""
        return cls.atoms(q.nodes, dom.harmonic_measure_weights(d, q))

    @property
    def is_measure(self) -> bool:
        return self.kind == "atoms"

    def node_values(self, q: dom.SphereQuadrature) -> np.ndarray:
        if self.kind == "constant":
            return np.full(len(q), self.value)
        if self.kind == "function":
            if len(self.values) != len(q):
                raise DataError(f"boundary function has {len(self.values)} values for {len(q)} nodes")
            return np.asarray(self.values, dtype=float)
        raise UsageError("boundary atoms define a measure, not node values")

    def boundary_measure(self, d: dom.BallDomain, q: dom.SphereQuadrature):
        """``(points, masses)`` of ``f dH^{x0}`` or of the atoms."""
        if self.kind == "atoms":
            pts = np.asarray(self.points, dtype=float)
            d.check_boundary(pts)
            return pts, np.asarray(self.masses, dtype=float)
        return q.nodes, self.node_values(q) * dom.harmonic_measure_weights(d, q)


@dataclass(frozen=True)
class PhiPsi:
    """Boundary correction factors; identically 1 at regular points (all sphere points)."""

    phi: np.ndarray
    psi: np.ndarray


def phi_psi(d: dom.BallDomain, q: dom.SphereQuadrature) -> PhiPsi:
    """``phi = psi = 1`` at every node: every point of a sphere is regular."""
    return PhiPsi(np.ones(len(q)), np.ones(len(q)))


def m_star(d: dom.BallDomain, mu: DiscreteMeasure, z) -> np.ndarray:
    """``M* mu(z) = sum_i M(x_i, z) w_i`` at boundary points ``z``."""
    zs = np.atleast_2d(np.asarray(z, dtype=float))
    if len(mu) == 0:
        out = np.zeros(len(zs))
    else:
        out = mu.weights @ dom.martin_matrix(d, mu.nodes, zs)
    return out if np.ndim(z) > 1 else out[0]


def balayage_m(d: dom.BallDomain, omega: DiscreteMeasure, z) -> np.ndarray:
    """``M*(m ω)(z)``."""
    return m_star(d, weight_by(omega, lambda x: dom.modifier_m(d, x)), z)


def criterion_integral(d: dom.BallDomain, omega: DiscreteMeasure, f: BoundaryData, q: dom.SphereQuadrature,
                       C: float, mstar=None) -> float:
    """``∫ exp(C M*(mω)(z)) dν(z)``, ``ν = f dH^{x0}`` or the atoms of ``f``.

    Overflow gives ``inf``.  ``mstar`` may pass precomputed balayage values
    at the points of ``ν``.
    """
    if not C > 0:
        raise ValidationError(f"C must be positive, got {C}", "C")
    pts, masses = f.boundary_measure(d, q)
    ms = balayage_m(d, omega, pts) if mstar is None else np.asarray(mstar, dtype=float)
    with np.errstate(over="ignore"):
        terms = np.exp(C * ms) * masses
    terms = np.where(masses > 0, terms, 0.0)
    return float(np.sum(terms))


@dataclass
class ExistenceReport:
    """Verdict of the existence criteria for one configuration."""

    norm: float
    norm_bracket: tuple
    Mstar_values: np.ndarray
    criterion: dict
    C_suff: float | None
    necessary_integral: float
    sufficient_integral: float | None
    verdict: str
    witness_converged: bool | None = None
    witness_terms: int | None = None
    notes: list = field(default_factory=list)


def _default_sample(d: dom.BallDomain, q: dom.SphereQuadrature, count: int = 12, seed: int = 0):
    rng = np.random.default_rng(seed)
    from .bounds import ball_sampler

    x = ball_sampler(d.center, d.radius, 0.9)(rng, count)
    z = q.nodes[rng.choice(len(q), size=count, replace=len(q) < count)]
    return x, z


def existence_verdict(d: dom.BallDomain, omega: DiscreteMeasure, f: BoundaryData, q: dom.SphereQuadrature,
                      C_suff: float | None = None, op: opm.KernelOperator | None = None,
                      tol: float = opm.DEFAULT_TOL, max_terms: int = opm.DEFAULT_MAX_TERMS,
                      witness: bool = True, seed: int = 0) -> ExistenceReport:
    """Decide existence of the minimal solution for boundary data ``f``.

    ``exists_certified`` needs a certified ``||T|| < 1`` and a finite
    integral at ``C_suff``; ``nonexistence_certified`` needs
    ``||T|| > 1 + margin`` (or an atom) or a divergent ``C = 1`` integral.
    ``C_suff`` defaults to the empirical sandwich constant on a small
    sample of the same configuration.
    """
    if op is None:
        op = opm.assemble(d, omega, seed=seed)
    pts, _ = f.boundary_measure(d, q)
    ms = balayage_m(d, omega, pts)
    notes = []
    nec = criterion_integral(d, omega, f, q, 1.0, mstar=ms)
    crit = {1.0: nec}
    suff = None
    witness_ok = witness_terms = None
    if op.certified:
        if C_suff is None:
            from .bounds import verify_sandwich

            xs, zs = _default_sample(d, q, seed=seed)
            try:
                C_suff = verify_sandwich(d, op, xs, zs, tol, max_terms=max_terms).empirical_C
                notes.append("C_suff from empirical sandwich constant")
            except ConvergenceError:
                notes.append("sandwich sample exceeded the term budget; no C_suff")
        if C_suff is not None and np.isfinite(C_suff):
            suff = criterion_integral(d, omega, f, q, C_suff, mstar=ms)
            crit[float(C_suff)] = suff
    if op.divergent or op.norm_bracket[0] > 1.0 + NONEXISTENCE_MARGIN:
        verdict = "nonexistence_certified"
        notes.append("norm above 1" if not op.divergent else "atomic measure: norm infinite")
    elif not np.isfinite(nec):
        verdict = "nonexistence_certified"
        notes.append("necessary integral diverges")
    elif op.certified and suff is not None and np.isfinite(suff):
        verdict = "exists_certified"
    else:
        verdict = "inconclusive"
    if witness:
        try:
            if f.is_measure:
                res = opm.minimal_solution_uh(d, op, (pts, np.asarray(f.masses)), tol=tol, max_terms=max_terms)
            else:
                res = opm.minimal_solution_uf(d, op, f, q, tol=tol, max_terms=max_terms)
            witness_ok, witness_terms = bool(res.converged), int(res.terms_used)
        except ConvergenceError as exc:
            witness_ok, witness_terms = False, exc.terms
            notes.append("witness series exceeded the term budget")
    return ExistenceReport(op.norm_estimate, tuple(op.norm_bracket), ms, crit, C_suff, nec, suff, verdict,
                           witness_ok, witness_terms, notes)


@dataclass
class BoundaryLimit:
    """Ratios ``Gμ(x_k)/G(x_k, x0)`` and ``Gμ(x_k)/m(x_k)`` along the inward normal."""

    limit: float
    m_star: float
    distances: np.ndarray
    ratio_green: np.ndarray
    ratio_m: np.ndarray
    errors: np.ndarray
    monotone: bool


def boundary_ratio_limit(d: dom.BallDomain, mu: DiscreteMeasure, z, steps: int = 10) -> BoundaryLimit:
    """Approach ``z`` along the inward normal at distances ``R 2^{-k}``, k = 1..steps.

    Both ratios converge to ``M* mu(z)``; ``monotone`` is False (and a
    warning logged) when the error grows over the last three steps while
    still above round-off.
    """
    zz = np.asarray(z, dtype=float)
    d.check_boundary(zz)
    dist = d.radius * 2.0 ** -np.arange(1, steps + 1, dtype=float)
    xs = zz[None, :] + dist[:, None] * d.inward_normal(zz)[None, :]
    target = float(m_star(d, mu, zz))
    if len(mu) == 0:
        gmu = np.zeros(len(xs))
    else:
        gmu = dom.green_apply(d, xs, mu.nodes, mu.weights)
    rg = gmu / dom.green(d, xs, np.broadcast_to(d.x0, xs.shape))
    rm = gmu / dom.modifier_m(d, xs)
    err = np.abs(rg - target)
    tail = err[-3:]
    # errors at round-off level count as converged
    floor = 1e-12 * max(1.0, abs(target))
    monotone = bool(np.all(np.diff(tail) <= 0) or np.all(tail <= floor))
    if not monotone:
        log.warning("boundary ratio error not monotone over the last three steps at z=%s", zz)
    return BoundaryLimit(float(rg[-1]), target, dist, rg, rm, err, monotone)


@dataclass
class ClaimCheck:
    """Per-z margins of the two balayage inequalities for ``u_K``.

    ``upper_margin = 1 - LHS / (C_K exp(C M*))`` and
    ``lower_margin = 1 - exp(M*) / (LHS / c_K + C_K / c_K)``; both
    inequalities hold where the margin is nonnegative.
    """

    z: np.ndarray
    lhs: np.ndarray
    mstar: np.ndarray
    upper_margin: np.ndarray
    lower_margin: np.ndarray
    c_K: float
    C_K: float
    C: float

    @property
    def holds(self) -> bool:
        return bool(np.all(self.upper_margin >= 0) and np.all(self.lower_margin >= 0))


def mu0_claim_check(d: dom.BallDomain, op: opm.KernelOperator, region, sample_z, C: float | None = None,
                    tol: float = opm.DEFAULT_TOL, q: dom.SphereQuadrature | None = None) -> ClaimCheck:
    """Check ``∫ M(y, z) u_K dω <= C_K exp(C M*(mω)(z))`` and
    ``exp(M*(mω)(z)) <= c_K^{-1} ∫ M(y, z) u_K dω + C_K / c_K`` at ``sample_z``.

    ``C`` defaults to the empirical exponent of ``u_K / m <= C_K exp(C Tm / m)``.
    """
    zs = np.atleast_2d(np.asarray(sample_z, dtype=float))
    d.check_boundary(zs)
    uk = opm.u_K(d, op, region, tol, q=q)
    if not uk.series.converged:
        raise ConvergenceError("u_K series did not converge", terms=uk.series.terms_used)
    if C is None:
        C = max(uk.exp_constant, 0.0) if np.isfinite(uk.exp_constant) else 1.0
    Mz = dom.martin_matrix(d, op.nodes, zs)
    lhs = (op.weights * uk.series.values) @ Mz
    ms = balayage_m(d, op.measure, zs)
    with np.errstate(over="ignore"):
        upper = 1.0 - lhs / (uk.C_K * np.exp(C * ms))
        lower = 1.0 - np.exp(ms) / (lhs / uk.c_K + uk.C_K / uk.c_K)
    return ClaimCheck(zs, lhs, ms, upper, lower, uk.c_K, uk.C_K, float(C))


__all__ = ["BoundaryData", "PhiPsi", "ExistenceReport", "BoundaryLimit", "ClaimCheck", "VERDICTS", "phi_psi",
           "m_star", "balayage_m", "criterion_integral", "existence_verdict", "boundary_ratio_limit",
           "mu0_claim_check"]
