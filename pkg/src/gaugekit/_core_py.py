"""Pure-numpy implementations of the hot kernels.

Mirrors ``gaugekit._core`` function for function; the backend picks the
compiled module when it imports and falls back to this one otherwise.
All inputs are in *scaled* coordinates: points already translated by the
ball center and divided by the radius, so the ball is the unit ball.
"""

import numpy as np

# Rows per block when a full (Na, Nb) temporary would be too large.
_CHUNK = 512


def _stable_green(d2, eps, p):
    # a^-p - b^-p with a = sqrt(d2), b = sqrt(d2 + eps), written without
    # subtracting nearly equal numbers: (b - a) = eps / (a + b).
    a = np.sqrt(d2)
    b = np.sqrt(d2 + eps)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.zeros_like(a)
        for k in range(p):
            s += b ** (p - 1 - k) * a**k
        out = eps / (a + b) * s / (a**p * b**p)
    out = np.where(a == 0.0, np.inf, out)
    return np.where(eps <= 0.0, np.where(a == 0.0, np.inf, 0.0), out)


def _pair_terms(xs, ys):
    xx = np.einsum("ij,ij->i", xs, xs)
    yy = np.einsum("ij,ij->i", ys, ys)
    d2 = xx[:, None] + yy[None, :] - 2.0 * xs @ ys.T
    # Recompute small distances directly; the expanded form loses accuracy.
    np.maximum(d2, 0.0, out=d2)
    close = d2 < 1e-6 * (1.0 + xx[:, None] + yy[None, :])
    if close.any():
        ii, jj = np.nonzero(close)
        diff = xs[ii] - ys[jj]
        d2[ii, jj] = np.einsum("ij,ij->i", diff, diff)
    eps = (1.0 - xx)[:, None] * (1.0 - yy)[None, :]
    return d2, eps


def green_block(xs, ys, dim):
    """Unit-ball Green function without the ``c_n R^(2-n)`` prefactor.

    Parameters
    ----------
    xs : (Na, n) ndarray
    ys : (Nb, n) ndarray
        Scaled points in the closed unit ball.
    dim : int
        Ambient dimension n >= 3.

    Returns
    -------
    (Na, Nb) ndarray
        ``|x-y|^(2-n) - (|x-y|^2 + (1-|x|^2)(1-|y|^2))^((2-n)/2)``;
        ``inf`` where ``x == y`` and 0 where either point is on the sphere.
    """
    xs = np.ascontiguousarray(xs, dtype=float)
    ys = np.ascontiguousarray(ys, dtype=float)
    p = dim - 2
    out = np.empty((xs.shape[0], ys.shape[0]))
    for start in range(0, xs.shape[0], _CHUNK):
        stop = min(start + _CHUNK, xs.shape[0])
        d2, eps = _pair_terms(xs[start:stop], ys)
        out[start:stop] = _stable_green(d2, eps, p)
    return out


def green_apply(xs, ys, coef, dim):
    """Matrix-free ``sum_j green_block(x_i, y_j) * coef[j, :]``.

    ``coef`` may be 1-D or 2-D; coincident pairs contribute ``inf`` only
    when their coefficient is nonzero.
    """
    coef = np.asarray(coef, dtype=float)
    flat = coef.ndim == 1
    c2 = coef[:, None] if flat else coef
    out = np.zeros((xs.shape[0], c2.shape[1]))
    for start in range(0, xs.shape[0], _CHUNK):
        stop = min(start + _CHUNK, xs.shape[0])
        blk = green_block(xs[start:stop], ys, dim)
        inf = np.isinf(blk)
        if inf.any():
            blk = np.where(inf, 0.0, blk)
            hit = inf.astype(float) @ (c2 != 0.0).astype(float)
            part = blk @ c2
            part[hit > 0] = np.inf
        else:
            part = blk @ c2
        out[start:stop] = part
    return out[:, 0] if flat else out


def poisson_block(xs, zs, dim):
    """Unit-ball Poisson kernel without the ``1/(omega_{n-1} R)`` prefactor.

    Returns ``(1 - |x|^2) / |x - z|^n`` for scaled interior ``xs`` and
    scaled boundary ``zs``.
    """
    xs = np.ascontiguousarray(xs, dtype=float)
    zs = np.ascontiguousarray(zs, dtype=float)
    xx = np.einsum("ij,ij->i", xs, xs)
    out = np.empty((xs.shape[0], zs.shape[0]))
    for start in range(0, xs.shape[0], _CHUNK):
        stop = min(start + _CHUNK, xs.shape[0])
        diff = xs[start:stop, None, :] - zs[None, :, :]
        r2 = np.einsum("ijk,ijk->ij", diff, diff)
        out[start:stop] = (1.0 - xx[start:stop])[:, None] / r2 ** (0.5 * dim)
    return out


def _smoothed_terms(d2, eps, rho, p, dim):
    g = _stable_green(d2, eps, p)
    near = (d2 < rho**2) & (rho > 0)
    if near.any():
        r = rho[near]
        with np.errstate(divide="ignore"):
            img = np.where(eps[near] > 0, (d2[near] + eps[near]) ** (-0.5 * p), np.inf)
        v = dim / (2.0 * r**p) - p * d2[near] / (2.0 * r**dim) - img
        g[near] = np.maximum(v, 0.0)
    return g


def smoothed_block(xs, rho, dim):
    """Symmetric node-to-node block with the near field ball-averaged.

    For ``i != j`` with ``|x_i - x_j| < rho_ij = max(rho_i, rho_j)`` the
    Riesz part ``|x-y|^(2-n)`` is replaced by its mean over the ball of
    radius ``rho_ij`` about either point,
    ``n / (2 rho^(n-2)) - (n-2) |x-y|^2 / (2 rho^n)``, which agrees with the
    Riesz kernel at ``|x-y| = rho_ij``; farther pairs use ``green_block``.
    The diagonal is left 0 for the caller.  Negative values clip to 0.
    """
    xs = np.ascontiguousarray(xs, dtype=float)
    rho = np.asarray(rho, dtype=float)
    p = dim - 2
    N = xs.shape[0]
    out = np.empty((N, N))
    for start in range(0, N, _CHUNK):
        stop = min(start + _CHUNK, N)
        d2, eps = _pair_terms(xs[start:stop], xs)
        r = np.maximum(rho[start:stop, None], rho[None, :])
        out[start:stop] = _smoothed_terms(d2, eps, r, p, dim)
    idx = np.arange(N)
    out[idx, idx] = 0.0
    return out


def smoothed_apply(xs, rho, coef, dim):
    """Matrix-free product with ``smoothed_block`` (self pairs excluded)."""
    xs = np.ascontiguousarray(xs, dtype=float)
    rho = np.asarray(rho, dtype=float)
    coef = np.asarray(coef, dtype=float)
    flat = coef.ndim == 1
    c2 = coef[:, None] if flat else coef
    p = dim - 2
    N = xs.shape[0]
    out = np.zeros((N, c2.shape[1]))
    for start in range(0, N, _CHUNK):
        stop = min(start + _CHUNK, N)
        d2, eps = _pair_terms(xs[start:stop], xs)
        r = np.maximum(rho[start:stop, None], rho[None, :])
        blk = _smoothed_terms(d2, eps, r, p, dim)
        blk[np.arange(stop - start), np.arange(start, stop)] = 0.0
        inf = np.isinf(blk)
        if inf.any():
            blk = np.where(inf, 0.0, blk)
            hit = inf.astype(float) @ (c2 != 0.0).astype(float)
            part = blk @ c2
            part[hit > 0] = np.inf
        else:
            part = blk @ c2
        out[start:stop] = part
    return out[:, 0] if flat else out
