"""The Green integral operator on a discrete measure and its Neumann series.

For a discrete measure with nodes ``x_i`` and weights ``w_i`` the operator
``(T g)(x_i) = sum_j K[i, j] g(x_j) w_j`` uses ``K = G`` between well
separated nodes, the ball-averaged Riesz part for close pairs, and a
desingularized self value on the diagonal (see :func:`diagonal_values`).  All
series objects of the theory (gauge, minimal solutions, perturbed Martin
and Green kernels, ``u_K``) are partial sums of ``sum_j T^j g0`` for
different seeds ``g0``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import domain as dom
from .errors import ConvergenceError, DataError, UsageError, ValidationError
from .measure import AnnulusRegion, BallRegion, DiscreteMeasure, check_region
from .potential import ball_potential

log = logging.getLogger(__name__)

#: ``converged`` requires a certified norm at or below ``1 - CERT_MARGIN``.
CERT_MARGIN = 1e-9
DEFAULT_TOL = 1e-10
DEFAULT_MAX_TERMS = 5000
#: Partial sums above this are reported as divergence.
DIVERGENCE_THRESHOLD = 1e12


@dataclass(frozen=True, eq=False)
class KernelOperator:
    """Assembled matrix form of T with its L^2(ω) norm estimate.

    Attributes
    ----------
    matrix : (N, N) ndarray
        ``K[i, j]``; symmetric, nonnegative.
    norm_estimate : float
        Best estimate of ``||T||`` (``inf`` for divergent operators).
    norm_bracket : (float, float)
        Certified lower/upper bounds for ``||T||``.
    contraction : float
        ``rho`` with ``K D phi <= rho phi`` componentwise for the stored
        positive vector ``phi``; drives the a posteriori tail bounds.
    """

    domain: dom.BallDomain
    measure: DiscreteMeasure
    matrix: np.ndarray
    norm_estimate: float
    norm_method: str
    norm_bracket: tuple = (0.0, 0.0)
    norm_tol: float = DEFAULT_TOL
    iterations: int = 0
    perron: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    contraction: float = 0.0
    seed: int = 0

    @property
    def weights(self) -> np.ndarray:
        return self.measure.weights

    @property
    def nodes(self) -> np.ndarray:
        return self.measure.nodes

    @property
    def size(self) -> int:
        return len(self.measure)

    @property
    def divergent(self) -> bool:
        return self.norm_method == "divergent"

    @property
    def certified(self) -> bool:
        """True when ``||T|| <= 1 - CERT_MARGIN`` is certified."""
        return (not self.divergent) and self.norm_bracket[1] <= 1.0 - CERT_MARGIN \
            and self.contraction < 1.0

    @property
    def status(self) -> str:
        if self.divergent or self.norm_bracket[0] > 1.0 + 1e-6:
            return "supercritical"
        if self.certified:
            return "subcritical"
        return "inconclusive"


@dataclass
class NeumannResult:
    """Partial sum of ``sum_j T^j g0`` with its a posteriori tail bound.

    ``tail_bound`` is relative to the max norm of the partial sum;
    ``status`` is ``"converged"``, ``"divergent"`` or ``"inconclusive"``.
    Values at extra evaluation points, when requested, live in
    ``point_values`` with absolute error bound ``point_tail``.
    """

    values: np.ndarray
    terms_used: int
    tail_bound: float
    converged: bool
    status: str = "converged"
    point_values: np.ndarray | None = None
    point_tail: float | None = None
    partial_max: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# assembly and norm


def diagonal_values(d: dom.BallDomain, mu: DiscreteMeasure) -> np.ndarray:
    """Self value ``K[i, i]`` of the kernel at each node.

    Uses the measure's stored self values when it has them (rows then
    reproduce the exact potential of the density).  Otherwise the Riesz
    part is averaged over the ball of radius ``rho`` about the node,
    ``c_n n / (2 rho^{n-2})``, and the smooth image part is taken at
    coincidence.  Atoms get 0.
    """
    if mu.diagonal is not None:
        return np.array(mu.diagonal)
    n = d.dim
    out = np.zeros(len(mu))
    cells = mu.smoothing_radii > 0
    riesz = dom.green_constant(n) * n / (2.0 * mu.smoothing_radii[cells] ** (n - 2))
    out[cells] = np.maximum(riesz - dom.green_image_diagonal(d, mu.nodes[cells]), 0.0)
    return out


def assemble(d: dom.BallDomain, mu: DiscreteMeasure, tol: float = DEFAULT_TOL, seed: int = 0,
             method: str = "power_iteration", max_iter: int = 20000) -> KernelOperator:
    """Assemble T on the nodes of ``mu`` and estimate its norm.

    Atoms with positive mass make the operator divergent (``G(x, x) = inf``):
    the result carries ``norm_estimate = inf`` instead of raising.
    """
    if len(mu) == 0:
        raise ValidationError("cannot assemble an operator on an empty measure", "measure")
    if mu.dim != d.dim:
        raise UsageError("measure and domain dimensions differ")
    d.check_interior(mu.nodes)
    K = dom.smoothed_matrix(d, mu.nodes, mu.smoothing_radii)
    # duplicated atoms
    K[~np.isfinite(K)] = 0.0
    np.fill_diagonal(K, diagonal_values(d, mu))
    if np.any(mu.atomic):
        return KernelOperator(d, mu, K, float("inf"), "divergent", (float("inf"), float("inf")),
                              tol, 0, np.ones(len(mu)), float("inf"), seed)
    op = KernelOperator(d, mu, K, 0.0, method, (0.0, 0.0), tol, 0, np.ones(len(mu)), 0.0, seed)
    return _with_norm(op, tol, method, max_iter)


def _with_norm(op: KernelOperator, tol, method, max_iter) -> KernelOperator:
    w = op.weights
    if not np.any(w > 0):
        return KernelOperator(op.domain, op.measure, op.matrix, 0.0, method, (0.0, 0.0), tol, 0,
                              np.ones(op.size), 0.0, op.seed)
    if method == "dense_eigen":
        sw = np.sqrt(w)
        S = sw[:, None] * op.matrix * sw[None, :]
        vals, vecs = np.linalg.eigh(S)
        lam, v = float(vals[-1]), np.abs(vecs[:, -1])
        lower = upper = lam
        its = 0
    elif method == "power_iteration":
        lam, v, (lower, upper), its = power_iteration(op.matrix, w, tol, op.seed, max_iter)
    else:
        raise ValidationError(f"unknown norm method {method!r}", "norm_method")
    perron, rho = _perron_and_contraction(op.matrix, w, v, lam)
    upper = max(upper, rho) if method == "power_iteration" else upper
    return KernelOperator(op.domain, op.measure, op.matrix, lam, method, (lower, upper), tol, its,
                          perron, rho, op.seed)


def power_iteration(K: np.ndarray, w: np.ndarray, tol: float = DEFAULT_TOL, seed: int = 0,
                    max_iter: int = 20000):
    """Largest eigenvalue of ``D^{1/2} K D^{1/2}`` with a two-sided bracket.

    The lower bound is the larger of the Rayleigh quotient and the
    Collatz-Wielandt minimum, the upper bound the Collatz-Wielandt maximum
    (valid because the matrix is entrywise nonnegative).  Iterates until
    ``upper - lower <= tol * upper``.

    Returns
    -------
    lam : float
    vec : ndarray
        Normalized eigenvector estimate (zero on zero-weight nodes).
    bracket : (float, float)
    iterations : int

    Raises
    ------
    ConvergenceError
        After ``max_iter`` steps, carrying the last bracket.
    """
    pos = w > 0
    sw = np.sqrt(w[pos])
    Kp = K[np.ix_(pos, pos)] if not np.all(pos) else K
    rng = np.random.default_rng(seed)
    v = rng.uniform(0.5, 1.5, size=int(pos.sum()))
    v /= np.linalg.norm(v)
    lower, upper = 0.0, np.inf
    for it in range(1, max_iter + 1):
        y = sw * (Kp @ (sw * v))
        ray = float(v @ y)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = y / v
        ratio = ratio[np.isfinite(ratio)]
        lower = max(ray, float(ratio.min()) if ratio.size else 0.0)
        upper = float(ratio.max()) if ratio.size else 0.0
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            lower = upper = 0.0
            break
        v = y / nrm
        if upper - lower <= tol * upper:
            break
    else:
        raise ConvergenceError(f"power iteration did not reach relative gap {tol} in {max_iter} steps",
                               bracket=(lower, upper))
    full = np.zeros(len(w))
    full[pos] = v
    return lower, full, (lower, upper), it


def _perron_and_contraction(K, w, v, lam):
    # phi is the right Perron vector of K D; extend to zero-weight nodes
    # through phi = K D^{1/2} v / lam.
    n = len(w)
    if lam <= 0:
        return np.ones(n), 0.0
    phi = K @ (np.sqrt(w) * v) / lam
    if not np.all(phi > 0):
        phi = np.maximum(phi, np.max(phi) * 1e-300)
    Aphi = K @ (w * phi)
    rho = float(np.max(Aphi / phi))
    return phi, rho


def operator_norm(op: KernelOperator, tol: float = DEFAULT_TOL, max_iter: int = 20000) -> float:
    """``||T||`` on L^2(ω) by power iteration at relative tolerance ``tol``."""
    if op.divergent:
        return float("inf")
    if op.norm_method == "power_iteration" and op.norm_tol <= tol:
        return op.norm_estimate
    return _with_norm(op, tol, "power_iteration", max_iter).norm_estimate


def rescaled(op: KernelOperator, t: float) -> KernelOperator:
    """Operator for the measure ``t * mu`` reusing the assembled matrix."""
    if t < 0:
        raise DataError("scale factor must be nonnegative")
    mu = op.measure
    new_mu = mu.reweighted(mu.weights * t)
    if op.divergent:
        if np.any(new_mu.atomic):
            return KernelOperator(op.domain, new_mu, op.matrix, float("inf"), "divergent",
                                  (float("inf"), float("inf")), op.norm_tol, 0, op.perron,
                                  float("inf"), op.seed)
        return _with_norm(KernelOperator(op.domain, new_mu, op.matrix, 0.0, "power_iteration",
                                         seed=op.seed), op.norm_tol, "power_iteration", 20000)
    lam = op.norm_estimate * t
    return KernelOperator(op.domain, new_mu, op.matrix, lam, op.norm_method,
                          (op.norm_bracket[0] * t, op.norm_bracket[1] * t), op.norm_tol,
                          op.iterations, op.perron, op.contraction * t, op.seed)


# ---------------------------------------------------------------------------
# applications


def _check_values(op: KernelOperator, g, name="g"):
    g = np.asarray(g, dtype=float)
    if g.shape[0] != op.size or g.ndim not in (1, 2):
        raise UsageError(f"{name} has shape {g.shape}; expected ({op.size},) or ({op.size}, k)")
    if not np.all(np.isfinite(g)):
        raise DataError(f"{name} must be finite")
    if np.any(g < 0):
        raise DataError(f"{name} must be nonnegative")
    return g


def _apply(op: KernelOperator, g):
    wg = op.weights * g if g.ndim == 1 else op.weights[:, None] * g
    out = op.matrix @ wg
    if op.divergent:
        hit = (op.measure.atomic[:, None] if g.ndim == 2 else op.measure.atomic) & (g > 0)
        out = np.where(hit, np.inf, out)
    return out


def apply(op: KernelOperator, g) -> np.ndarray:
    """``(T g)(x_i) = sum_j K[i, j] g_j w_j`` at the nodes."""
    return _apply(op, _check_values(op, g))


def green_rows(op: KernelOperator, xs) -> np.ndarray:
    """Kernel rows ``K(x, x_j)`` for evaluation points ``xs``.

    Same near-field averaging as the node matrix; a point coinciding with a
    node gets that node's self value.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    rows = dom.smoothed_cross(op.domain, xs, op.nodes, op.measure.smoothing_radii)
    bad = ~np.isfinite(rows)
    if bad.any():
        ii, jj = np.nonzero(bad)
        rows[ii, jj] = np.diag(op.matrix)[jj]
    return rows


def apply_at(op: KernelOperator, g, x) -> np.ndarray:
    """``sum_j G(x, x_j) g_j w_j`` at points ``x`` off the nodes.

    ``g`` may be ``(N,)`` or ``(N, k)``; ``x`` a point or ``(m, n)`` array.
    """
    g = _check_values(op, g)
    xs = np.atleast_2d(np.asarray(x, dtype=float))
    wg = op.weights * g if g.ndim == 1 else op.weights[:, None] * g
    out = np.concatenate([green_rows(op, xs[i:i + 256]) @ wg for i in range(0, len(xs), 256)])
    return out if np.ndim(x) > 1 else out[0]


def evaluation_gain(op: KernelOperator, xs) -> float:
    """``max_x sum_j G(x, x_j) w_j``, the factor turning node tails into point tails."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    return float(np.max(green_rows(op, xs) @ op.weights))


# ---------------------------------------------------------------------------
# Neumann series


def _phi_norm(g, phi):
    ratio = g / (phi[:, None] if g.ndim == 2 else phi)
    return np.max(np.abs(ratio), axis=0)


def neumann_sum(op: KernelOperator, g0, tol: float = DEFAULT_TOL, max_terms: int = DEFAULT_MAX_TERMS,
                divergence_threshold: float = DIVERGENCE_THRESHOLD) -> NeumannResult:
    """Partial sums of ``sum_{j>=0} T^j g0`` with a certified stopping rule.

    After adding ``T^J g0`` the remainder is bounded componentwise by
    ``||T^J g0||_phi * phi * rho / (1 - rho)`` where ``phi`` is the stored
    Perron vector and ``rho`` the certified contraction; ``tail_bound`` is
    that bound relative to the max norm of the partial sum.

    When ``||T|| < 1`` is not certified the sum runs until it exceeds
    ``divergence_threshold`` or ``max_terms`` is reached and comes back
    with ``converged=False``.

    Raises
    ------
    ConvergenceError
        ``||T|| < 1`` is certified but ``tol`` was not reached in
        ``max_terms`` terms.
    """
    g0 = _check_values(op, g0, "g0")
    if op.divergent:
        first = _apply(op, g0)
        vals = np.where(np.isinf(first), np.inf, g0 + first)
        if np.all(np.isfinite(vals)) and np.any(vals > 0):
            vals = np.full_like(vals, np.inf)
        elif not np.any(g0 > 0):
            return NeumannResult(g0.copy(), 1, 0.0, True, "converged", partial_max=[0.0])
        return NeumannResult(vals, 2, float("inf"), False, "divergent", partial_max=[float(np.max(g0)), np.inf])
    certified = op.certified
    phi, rho = op.perron, op.contraction
    total = g0.copy()
    term = g0
    history = [float(np.max(total))]
    for J in range(0, max_terms):
        if certified:
            scale = np.max(np.abs(total), axis=0)
            tail_abs = _phi_norm(term, phi) * np.max(phi) * rho / (1.0 - rho)
            with np.errstate(divide="ignore", invalid="ignore"):
                rel = np.where(scale > 0, tail_abs / scale, np.where(tail_abs > 0, np.inf, 0.0))
            tail = float(np.max(rel))
            if tail < tol:
                return NeumannResult(total, J + 1, tail, True, "converged", partial_max=history)
        term = _apply(op, term)
        total = total + term
        history.append(float(np.max(total)))
        if not certified and history[-1] > divergence_threshold:
            return NeumannResult(total, J + 2, float("inf"), False, "divergent", partial_max=history)
    if certified:
        raise ConvergenceError(f"Neumann series did not reach tolerance {tol} in {max_terms} terms",
                               terms=max_terms)
    status = "divergent" if op.status == "supercritical" else "inconclusive"
    return NeumannResult(total, max_terms, float("inf"), False, status, partial_max=history)


def _attach_points(op, res: NeumannResult, g0_points, points):
    if points is None:
        return res
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if not res.converged:
        shape = (len(pts),) + res.values.shape[1:]
        res.point_values = np.full(shape, np.inf if res.status == "divergent" else np.nan)
        res.point_tail = float("inf")
        return res
    res.point_values = g0_points + apply_at(op, res.values, pts)
    node_tail_abs = res.tail_bound * float(np.max(np.abs(res.values))) if res.values.size else 0.0
    res.point_tail = node_tail_abs * evaluation_gain(op, pts)
    return res


def gauge(d: dom.BallDomain, op: KernelOperator, points=None, tol: float = DEFAULT_TOL,
          max_terms: int = DEFAULT_MAX_TERMS) -> NeumannResult:
    """Gauge ``u_1 = sum_j T^j 1`` at the nodes and optional extra points."""
    res = neumann_sum(op, np.ones(op.size), tol, max_terms)
    g0p = None if points is None else np.ones(len(np.atleast_2d(points)))
    return _attach_points(op, res, g0p, points)


def minimal_solution_uf(d: dom.BallDomain, op: KernelOperator, f, q: dom.SphereQuadrature, points=None,
                        tol: float = DEFAULT_TOL, max_terms: int = DEFAULT_MAX_TERMS) -> NeumannResult:
    """Minimal solution ``u_f = sum_j T^j (Pf)``."""
    pf = dom.harmonic_extension(d, f, op.nodes, q)
    res = neumann_sum(op, pf, tol, max_terms)
    g0p = None if points is None else dom.harmonic_extension(d, f, np.atleast_2d(points), q)
    return _attach_points(op, res, g0p, points)


def boundary_measure(mu_h, q: dom.SphereQuadrature | None = None):
    """Normalize a Martin representing measure to ``(points, masses)``.

    Accepts an array of masses aligned with ``q.nodes``, a ``(points,
    masses)`` pair, or an object with ``points`` and ``masses`` attributes.
    """
    if hasattr(mu_h, "masses"):
        pts, m = mu_h.points, mu_h.masses
    elif isinstance(mu_h, tuple):
        pts, m = mu_h
    else:
        if q is None:
            raise UsageError("mass array given without a sphere quadrature")
        pts, m = q.nodes, mu_h
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    m = np.asarray(m, dtype=float).reshape(-1)
    if len(m) != len(pts):
        raise UsageError("boundary measure points and masses differ in length")
    if not np.all(np.isfinite(m)) or np.any(m < 0):
        raise DataError("boundary measure must be finite and nonnegative")
    return pts, m


def harmonic_from_measure(d: dom.BallDomain, mu_h, x, q=None) -> np.ndarray:
    """``h(x) = sum_i M(x, z_i) mu_h_i``."""
    pts, m = boundary_measure(mu_h, q)
    return dom.martin_matrix(d, np.atleast_2d(x), pts) @ m


def minimal_solution_uh(d: dom.BallDomain, op: KernelOperator, mu_h, q=None, points=None,
                        tol: float = DEFAULT_TOL, max_terms: int = DEFAULT_MAX_TERMS) -> NeumannResult:
    """Minimal solution ``u_h = sum_j T^j h`` for ``h`` with Martin measure ``mu_h``."""
    h = harmonic_from_measure(d, mu_h, op.nodes, q)
    res = neumann_sum(op, h, tol, max_terms)
    g0p = None if points is None else harmonic_from_measure(d, mu_h, points, q)
    return _attach_points(op, res, g0p, points)


def martin_series(d: dom.BallDomain, op: KernelOperator, zs, tol: float = DEFAULT_TOL,
                  max_terms: int = DEFAULT_MAX_TERMS) -> NeumannResult:
    """``sum_j T^j M(., z)`` at the nodes, one column per boundary point."""
    zs = np.atleast_2d(zs)
    return neumann_sum(op, dom.martin_matrix(d, op.nodes, zs), tol, max_terms)


def perturbed_martin(d: dom.BallDomain, op: KernelOperator, x, z, tol: float = DEFAULT_TOL,
                     max_terms: int = DEFAULT_MAX_TERMS) -> np.ndarray:
    """Perturbed Martin kernel at paired points ``(x[k], z[k])``.

    ``x`` and ``z`` broadcast against each other; returns ``inf`` where the
    series does not converge.
    """
    xs = np.atleast_2d(np.asarray(x, dtype=float))
    zs = np.atleast_2d(np.asarray(z, dtype=float))
    xs, zs = np.broadcast_arrays(xs, zs)
    d.check_interior(xs)
    uz, inv = np.unique(zs, axis=0, return_inverse=True)
    inv = np.asarray(inv).reshape(-1)
    res = martin_series(d, op, uz, tol, max_terms)
    scalar = np.ndim(x) == 1 and np.ndim(z) == 1
    if not res.converged:
        out = np.full(len(xs), np.inf)
        return out[0] if scalar else out
    rows = green_rows(op, xs) * op.weights[None, :]
    series_part = np.einsum("kj,jk->k", rows, res.values[:, inv])
    out = dom.martin(d, xs, zs) + series_part
    return out[0] if scalar else out


def conditional_gauge(d: dom.BallDomain, op: KernelOperator, x, z, tol: float = DEFAULT_TOL,
                      max_terms: int = DEFAULT_MAX_TERMS) -> np.ndarray:
    """``U(x, z) = M_perturbed(x, z) / M(x, z)``."""
    return perturbed_martin(d, op, x, z, tol, max_terms) / dom.martin(d, x, z)


def normalized_martin(d: dom.BallDomain, op: KernelOperator, x, z, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Perturbed Martin kernel normalized to 1 at the reference point."""
    xs = np.atleast_2d(np.asarray(x, dtype=float))
    zs = np.atleast_2d(np.asarray(z, dtype=float))
    xs, zs = np.broadcast_arrays(xs, zs)
    top = perturbed_martin(d, op, xs, zs, tol)
    bottom = perturbed_martin(d, op, np.broadcast_to(d.x0, xs.shape), zs, tol)
    out = top / bottom
    same = np.all(xs == d.x0, axis=1)
    out[same] = 1.0
    return out[0] if (np.ndim(x) == 1 and np.ndim(z) == 1) else out


def perturbed_green(d: dom.BallDomain, op: KernelOperator, x, y, tol: float = DEFAULT_TOL,
                    max_terms: int = DEFAULT_MAX_TERMS) -> np.ndarray:
    """Minimal Green function of ``-Δ - ω``: ``G(x, y) + sum_{j>=2} G_j(x, y)``.

    Seeds the series with ``G(., y)`` at the nodes; paired points broadcast.
    """
    xs = np.atleast_2d(np.asarray(x, dtype=float))
    ys = np.atleast_2d(np.asarray(y, dtype=float))
    xs, ys = np.broadcast_arrays(xs, ys)
    d.check_interior(xs)
    d.check_interior(ys)
    uy, inv = np.unique(ys, axis=0, return_inverse=True)
    inv = np.asarray(inv).reshape(-1)
    seeds = green_rows(op, uy).T
    res = neumann_sum(op, seeds, tol, max_terms)
    scalar = np.ndim(x) == 1 and np.ndim(y) == 1
    if not res.converged:
        out = np.full(len(xs), np.inf)
        return out[0] if scalar else out
    rows = green_rows(op, xs) * op.weights[None, :]
    out = dom.green(d, xs, ys) + np.einsum("kj,jk->k", rows, res.values[:, inv])
    return out[0] if scalar else out


# ---------------------------------------------------------------------------
# u_K


def gchi(d: dom.BallDomain, region, x) -> np.ndarray:
    """``G chi_K(x) = int_K G(x, y) dy`` in closed form.

    Newtonian potential of the ball minus ``|K| H(x, center)``: the image
    part ``H(x, .)`` is harmonic on the ball, so its mean over ``K`` is its
    value at the center.  Shells are differences of two balls.
    """
    check_region(region, d)
    if isinstance(region, BallRegion):
        out = ball_potential(d, region.center, region.radius, x)
    else:
        out = ball_potential(d, region.center, region.outer, x)
        if region.inner > 0:
            out = out - ball_potential(d, region.center, region.inner, x)
    return out if np.ndim(x) > 1 else out[0]


def martin_mass(d: dom.BallDomain, region, zs) -> np.ndarray:
    """``int_K M(y, z) dy`` (boundary limit of ``G chi_K / m``) by the mean-value property."""
    zs = np.atleast_2d(zs)
    def ball(c, r):
        return dom.unit_ball_volume(d.dim) * r**d.dim * dom.martin_matrix(d, np.asarray(c), zs)[0]
    if isinstance(region, BallRegion):
        return ball(region.center, region.radius)
    out = ball(region.center, region.outer)
    return out - ball(region.center, region.inner) if region.inner > 0 else out


@dataclass
class UKResult:
    """``u_K`` together with the empirical constants of the ``G chi_K ~ m`` sandwich."""

    series: NeumannResult
    gchi: np.ndarray
    c_K: float
    C_K: float
    c_K_nodes: float
    C_K_nodes: float
    exp_constant: float


def u_K(d: dom.BallDomain, op: KernelOperator, region, tol: float = DEFAULT_TOL,
        max_terms: int = DEFAULT_MAX_TERMS, q: dom.SphereQuadrature | None = None) -> UKResult:
    """Minimal solution of ``u = T u + G chi_K`` and its sandwich constants.

    ``c_K``/``C_K`` are the min/max of ``G chi_K / m`` over the nodes and the
    boundary limits ``int_K M(y, z) dy`` at the nodes of ``q``;
    ``exp_constant`` is the smallest C with ``u_K / m <= C_K exp(C Tm / m)``
    at the nodes.
    """
    check_region(region, d)
    if q is None:
        q = dom.sphere_quadrature(d, 400)
    g = gchi(d, region, op.nodes)
    m = dom.modifier_m(d, op.nodes)
    ratio = g / m
    bl = martin_mass(d, region, q.nodes)
    c_nodes, C_nodes = float(ratio.min()), float(ratio.max())
    c_K = min(c_nodes, float(bl.min()))
    C_K = max(C_nodes, float(bl.max()))
    res = neumann_sum(op, g, tol, max_terms)
    exp_c = float("nan")
    if res.converged:
        tm = _apply(op, m) / m
        excess = np.log(res.values / (C_K * m))
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = np.where(excess > 0, excess / tm, 0.0)
        exp_c = float(np.max(cand)) if cand.size else 0.0
    return UKResult(res, g, c_K, C_K, c_nodes, C_nodes, exp_c)


__all__ = [
    "KernelOperator", "NeumannResult", "UKResult", "assemble", "operator_norm", "power_iteration",
    "rescaled", "apply", "apply_at", "green_rows", "neumann_sum", "gauge", "minimal_solution_uf",
    "minimal_solution_uh", "martin_series", "perturbed_martin", "conditional_gauge",
    "normalized_martin", "perturbed_green", "gchi", "martin_mass", "u_K", "AnnulusRegion",
    "BallRegion", "diagonal_values", "boundary_measure", "harmonic_from_measure",
]
