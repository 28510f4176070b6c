"""Exponential two-sided bounds for perturbed Martin kernels and solutions,
and sampled quasi-metric constants of modified Green kernels.

With ``TM(x, z) = T M(., z)(x)`` the perturbed Martin kernel satisfies

    M exp(TM / M) <= M_perturbed <= M exp(C TM / M)

where the lower constant is exactly 1 and C depends on the geometry and on
``||T||``.  :func:`verify_sandwich` checks the lower side and reports the
smallest C that makes the upper side hold on a sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import domain as dom
from . import operator as opm
from .errors import ValidationError

#: Draws per batch of the quasi-metric samplers; fixed so that a larger
#: sample count extends (never reshuffles) a smaller one.
_BATCH = 4096


@dataclass
class SandwichVerdict:
    """Outcome of :func:`verify_sandwich`.

    ``empirical_C`` is the smallest ``C >= 1`` for which the upper bound
    holds at every converged point (``nan`` if none converged);
    ``failures`` lists indices whose lower bound failed or whose series did
    not converge.
    """

    x: np.ndarray
    z: np.ndarray
    lower_ok: np.ndarray
    empirical_C: float
    theory_inputs: tuple
    perturbed: np.ndarray
    martin: np.ndarray
    tm: np.ndarray
    complete: bool = True
    failures: list = field(default_factory=list)

    @property
    def all_lower_ok(self) -> bool:
        return bool(np.all(self.lower_ok))


def _pairs(x, z):
    xs = np.atleast_2d(np.asarray(x, dtype=float))
    zs = np.atleast_2d(np.asarray(z, dtype=float))
    return np.broadcast_arrays(xs, zs)


def martin_potential(d: dom.BallDomain, op: opm.KernelOperator, x, z) -> np.ndarray:
    """``T M(., z)(x) = sum_j G(x, x_j) M(x_j, z) w_j`` at paired points."""
    xs, zs = _pairs(x, z)
    uz, inv = np.unique(zs, axis=0, return_inverse=True)
    inv = np.asarray(inv).reshape(-1)
    Mz = dom.martin_matrix(d, op.nodes, uz) * op.weights[:, None]
    rows = opm.green_rows(op, xs)
    return np.einsum("kj,jk->k", rows, Mz[:, inv])


def exp_lower_bound(d: dom.BallDomain, op: opm.KernelOperator, x, z) -> np.ndarray:
    """``M(x, z) exp(TM(x, z) / M(x, z))``, one application of T."""
    return exp_upper_bound(d, op, x, z, 1.0)


def exp_upper_bound(d: dom.BallDomain, op: opm.KernelOperator, x, z, C: float) -> np.ndarray:
    """``M(x, z) exp(C TM(x, z) / M(x, z))`` for ``C >= 1``."""
    if not C >= 1.0:
        raise ValidationError(f"C must be at least 1, got {C}", "C")
    xs, zs = _pairs(x, z)
    M = dom.martin(d, xs, zs)
    out = M * np.exp(C * martin_potential(d, op, xs, zs) / M)
    return out[0] if (np.ndim(x) == 1 and np.ndim(z) == 1) else out


def empirical_constant(perturbed, M, tm) -> float:
    """Smallest ``C >= 1`` with ``perturbed <= M exp(C tm / M)`` at every entry.

    Entries with ``tm = 0`` need ``perturbed <= M`` (0/0 counts as 1).
    """
    perturbed, M, tm = (np.asarray(a, dtype=float) for a in (perturbed, M, tm))
    excess = np.log(perturbed / M)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(tm > 0, excess / (tm / M), np.where(excess > 0, np.inf, 1.0))
    return float(max(1.0, np.max(ratio))) if ratio.size else 1.0


def verify_sandwich(d: dom.BallDomain, op: opm.KernelOperator, x, z, tol: float = opm.DEFAULT_TOL,
                    slack: float | None = None, kappa: float | None = None,
                    max_terms: int = opm.DEFAULT_MAX_TERMS) -> SandwichVerdict:
    """Check ``M exp(TM/M) <= M_perturbed`` at paired ``(x, z)`` and fit C.

    ``slack`` is the relative slack of the lower-bound test (default
    ``10 tol``).
    """
    xs, zs = _pairs(x, z)
    slack = 10.0 * tol if slack is None else slack
    M = dom.martin(d, xs, zs)
    tm = martin_potential(d, op, xs, zs)
    pert = opm.perturbed_martin(d, op, xs, zs, tol, max_terms)
    ok_series = np.isfinite(pert)
    lower = M * np.exp(tm / M)
    lower_ok = ok_series & (lower <= pert * (1.0 + slack))
    failures = [int(i) for i in np.nonzero(~lower_ok)[0]]
    emp = empirical_constant(pert[ok_series], M[ok_series], tm[ok_series]) if ok_series.any() else float("nan")
    return SandwichVerdict(xs, zs, lower_ok, emp, (kappa, op.norm_estimate), pert, M, tm,
                           bool(ok_series.all()), failures)


def pointwise_solution_bounds(d: dom.BallDomain, op: opm.KernelOperator, f, x, q: dom.SphereQuadrature,
                              C: float):
    """Bracket ``u_f(x)`` by the two exponential boundary integrals.

    ``lower = sum_i exp(TM(x, z_i)/M(x, z_i)) f(z_i) dH^x_i`` and ``upper``
    the same with ``C`` in the exponent; ``dH^x_i = P(x, z_i) dσ_i``.

    Returns
    -------
    lower, upper : ndarray
        One entry per row of ``x``.
    """
    if not C >= 1.0:
        raise ValidationError(f"C must be at least 1, got {C}", "C")
    fv = dom._node_values(f, q)
    xs = np.atleast_2d(np.asarray(x, dtype=float))
    d.check_interior(xs)
    Mnodes = dom.martin_matrix(d, op.nodes, q.nodes) * op.weights[:, None]
    tm = opm.green_rows(op, xs) @ Mnodes
    M = dom.martin_matrix(d, xs, q.nodes)
    hx = dom.poisson_matrix(d, xs, q.nodes) * q.weights[None, :]
    with np.errstate(over="ignore"):
        lower = (np.exp(tm / M) * hx) @ fv
        upper = (np.exp(C * tm / M) * hx) @ fv
    return (lower, upper) if np.ndim(x) > 1 else (lower[0], upper[0])


def solution_via_martin(d: dom.BallDomain, op: opm.KernelOperator, f, x, q: dom.SphereQuadrature,
                        tol: float = opm.DEFAULT_TOL) -> np.ndarray:
    """``u_f(x) = sum_i M_perturbed(x, z_i) f(z_i) dH^{x0}_i`` (Martin representation)."""
    fv = dom._node_values(f, q)
    xs = np.atleast_2d(np.asarray(x, dtype=float))
    wh = dom.harmonic_measure_weights(d, q)
    X = np.repeat(xs, len(q), axis=0)
    Z = np.tile(q.nodes, (len(xs), 1))
    pert = opm.perturbed_martin(d, op, X, Z, tol).reshape(len(xs), len(q))
    return pert @ (fv * wh)


def martin_lower_constant(d: dom.BallDomain, x, z) -> float:
    """``min M(x, z) / m(x)`` over all sampled ``x`` and ``z``."""
    xs = np.atleast_2d(np.asarray(x, dtype=float))
    ratio = dom.martin_matrix(d, xs, np.atleast_2d(z)) / dom.modifier_m(d, xs)[:, None]
    return float(ratio.min())


# ---------------------------------------------------------------------------
# quasi-metric constants


@dataclass
class QuasiMetricReport:
    """Sampled quasi-metric constants of ``d = m(x) m(y) / K(x, y)``.

    ``kappa`` is the max of ``d(a, b) / (d(a, c) + d(c, b))`` over every
    ordering of each sampled quadruple ``(x, y, w, x1)``; ``punctured_kappa``
    is the same statistic over ``(x, y, w)`` for the punctured quasi-metric
    ``d(a, b) / (d(a, x1) d(b, x1))``.
    """

    kappa: float
    punctured_kappa: float
    triple_count: int
    skipped: int
    kernel_id: str
    seed: int


def ball_sampler(center, radius: float, shrink: float = 0.999) -> Callable:
    """Uniform draws from ``B(center, shrink * radius)``."""
    center = np.asarray(center, dtype=float)

    def draw(rng, count):
        n = len(center)
        g = rng.standard_normal((count, n))
        g /= np.linalg.norm(g, axis=1)[:, None]
        r = shrink * radius * rng.random(count) ** (1.0 / n)
        return center + r[:, None] * g

    return draw


def riesz_kernel(dim: int) -> Callable:
    """Free-space kernel ``|x - y|^{2-n}``."""

    def k(x, y):
        with np.errstate(divide="ignore"):
            return np.linalg.norm(x - y, axis=-1) ** (2.0 - dim)

    return k


def unit_modifier(x):
    return np.ones(len(np.atleast_2d(x)))


def _triangle_ratio(dab, dac, dcb):
    with np.errstate(divide="ignore", invalid="ignore"):
        return dab / (dac + dcb)


def quasimetric_kappa(kernel: Callable, modifier: Callable, samples: int, seed: int, sampler: Callable,
                      kernel_id: str = "custom") -> QuasiMetricReport:
    """Sampled quasi-metric constant of ``K(x, y) / (m(x) m(y))``.

    Draws ``samples`` quadruples ``(x, y, w, x1)`` in fixed-size batches
    from ``sampler(rng, count)``; quadruples with coincident points or a
    non-finite distance are skipped and counted.  Deterministic in
    ``seed``, and a larger ``samples`` only adds draws.
    """
    rng = np.random.default_rng(seed)
    kappa = punctured = 0.0
    used = skipped = 0
    remaining = int(samples)
    while remaining > 0:
        pts = [sampler(rng, _BATCH) for _ in range(4)]
        take = min(remaining, _BATCH)
        pts = [p[:take] for p in pts]
        remaining -= take
        mods = [np.asarray(modifier(p), dtype=float) for p in pts]

        def dist(i, j):
            return mods[i] * mods[j] / kernel(pts[i], pts[j])

        D = {}
        for i in range(4):
            for j in range(i + 1, 4):
                D[i, j] = D[j, i] = dist(i, j)
        good = np.ones(take, dtype=bool)
        for v in D.values():
            good &= np.isfinite(v) & (v > 0)
        skipped += int(np.sum(~good))
        used += int(np.sum(good))
        if not good.any():
            continue
        for a in range(4):
            for b in range(a + 1, 4):
                for c in range(4):
                    if c in (a, b):
                        continue
                    r = _triangle_ratio(D[a, b], D[a, c], D[c, b])[good]
                    kappa = max(kappa, float(np.max(r)))
        # punctured at x1 = point 3
        Dt = {}
        for i in range(3):
            for j in range(i + 1, 3):
                Dt[i, j] = Dt[j, i] = D[i, j] / (D[i, 3] * D[j, 3])
        for a, b, c in ((0, 1, 2), (0, 2, 1), (1, 2, 0)):
            r = _triangle_ratio(Dt[a, b], Dt[a, c], Dt[c, b])[good]
            punctured = max(punctured, float(np.max(r)))
    return QuasiMetricReport(kappa, punctured, used, skipped, kernel_id, seed)


def green_kappa(d: dom.BallDomain, samples: int, seed: int, z=None, shrink: float = 0.999) -> QuasiMetricReport:
    """``quasimetric_kappa`` for the ball Green kernel with modifier m or ``M(., z)``."""
    if z is None:
        mod, kid = (lambda x: dom.modifier_m(d, x)), "green/m"
    else:
        zz = np.asarray(z, dtype=float)
        d.check_boundary(zz)
        mod, kid = (lambda x: dom.martin(d, x, zz)), "green/martin(" + ", ".join("%.6g" % v for v in zz) + ")"
    return quasimetric_kappa(lambda x, y: dom.green(d, x, y), mod, samples, seed,
                             ball_sampler(d.center, d.radius, shrink), kid)


@dataclass
class StrongTriangleReport:
    """Sampled constant of the strong generalized triangle property."""

    kappa: float
    samples: int
    violations: int
    worst: tuple


def strong_triangle_check(d: dom.BallDomain, samples: int, seed: int, kappa_ref: float | None = None,
                          shrink: float = 0.999) -> StrongTriangleReport:
    """Sup of ``(G(x1, y)/m(x1)) / (G(x2, y)/m(x2))`` over ``|x1 - x2| <= |x1 - y|``.

    ``x1`` and ``y`` are uniform in the ball; ``x2`` is uniform in
    ``B(x1, |x1 - y|)`` intersected with the ball (rejection).
    ``violations`` counts ratios above ``kappa_ref`` when it is given.
    """
    rng = np.random.default_rng(seed)
    draw = ball_sampler(d.center, d.radius, shrink)
    n = d.dim
    best, worst, violations, remaining = 0.0, (), 0, int(samples)
    while remaining > 0:
        take = min(remaining, _BATCH)
        remaining -= take
        x1 = draw(rng, _BATCH)[:take]
        y = draw(rng, _BATCH)[:take]
        rad = np.linalg.norm(x1 - y, axis=1)
        x2 = np.empty_like(x1)
        todo = np.arange(take)
        while todo.size:
            g = rng.standard_normal((todo.size, n))
            g /= np.linalg.norm(g, axis=1)[:, None]
            cand = x1[todo] + (rad[todo] * rng.random(todo.size) ** (1.0 / n))[:, None] * g
            ok = d.relative_radius(cand) < shrink
            x2[todo[ok]] = cand[ok]
            todo = todo[~ok]
        with np.errstate(divide="ignore", invalid="ignore"):
            r = (dom.green(d, x1, y) / dom.modifier_m(d, x1)) / (dom.green(d, x2, y) / dom.modifier_m(d, x2))
        r = np.where(np.isfinite(r), r, 0.0)
        i = int(np.argmax(r))
        if r[i] > best:
            best, worst = float(r[i]), (x1[i].copy(), x2[i].copy(), y[i].copy())
        if kappa_ref is not None:
            violations += int(np.sum(r > kappa_ref))
    return StrongTriangleReport(best, int(samples), violations, worst)


__all__ = ["SandwichVerdict", "QuasiMetricReport", "StrongTriangleReport", "exp_lower_bound", "exp_upper_bound",
           "verify_sandwich", "empirical_constant", "pointwise_solution_bounds", "solution_via_martin",
           "martin_potential", "martin_lower_constant", "quasimetric_kappa", "green_kappa", "riesz_kernel",
           "unit_modifier", "ball_sampler", "strong_triangle_check"]
