# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_core_py`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow, INFINITY

cnp.import_array()


cdef inline double _ipow(double x, int p) nogil:
    cdef double r = 1.0
    cdef int k
    for k in range(p):
        r *= x
    return r


cdef inline double _green(double d2, double eps, int p) nogil:
    # a^-p - b^-p = (b - a) sum_k b^(p-1-k) a^k / (a b)^p, b - a = eps/(a+b)
    cdef double a, b, s, t
    cdef int k
    if d2 == 0.0:
        return INFINITY
    if eps <= 0.0:
        return 0.0
    a = sqrt(d2)
    b = sqrt(d2 + eps)
    t = _ipow(b, p - 1)
    s = t
    for k in range(1, p):
        t = t * a / b
        s += t
    return eps / (a + b) * s / _ipow(a * b, p)


cdef inline double _smoothed(double d2, double eps, double rho, int p, int n) nogil:
    # ball-averaged Riesz part inside rho, exact Green function outside
    cdef double img, v
    if rho <= 0.0 or d2 >= rho * rho:
        return _green(d2, eps, p)
    if eps <= 0.0:
        return 0.0
    img = 1.0 / pow(d2 + eps, 0.5 * p)
    v = n / (2.0 * _ipow(rho, p)) - p * d2 / (2.0 * _ipow(rho, n)) - img
    return v if v > 0.0 else 0.0


cdef inline double _dist2(const double[:, ::1] X, const double[:, ::1] Y,
                          Py_ssize_t i, Py_ssize_t j, Py_ssize_t n) nogil:
    cdef double d2 = 0.0, t
    cdef Py_ssize_t k
    for k in range(n):
        t = X[i, k] - Y[j, k]
        d2 += t * t
    return d2


def _sq(a):
    return np.einsum("ij,ij->i", np.asarray(a), np.asarray(a))


def green_block(xs, ys, int dim):
    cdef const double[:, ::1] X = np.ascontiguousarray(xs, dtype=np.float64)
    cdef const double[:, ::1] Y = np.ascontiguousarray(ys, dtype=np.float64)
    cdef Py_ssize_t na = X.shape[0], nb = Y.shape[0], n = X.shape[1]
    cdef int p = dim - 2
    out = np.empty((na, nb), dtype=np.float64)
    cdef double[:, ::1] O = out
    cdef double[::1] xx = _sq(X)
    cdef double[::1] yy = _sq(Y)
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(na):
            for j in range(nb):
                O[i, j] = _green(_dist2(X, Y, i, j, n), (1.0 - xx[i]) * (1.0 - yy[j]), p)
    return out


def green_apply(xs, ys, coef, int dim):
    cdef const double[:, ::1] X = np.ascontiguousarray(xs, dtype=np.float64)
    cdef const double[:, ::1] Y = np.ascontiguousarray(ys, dtype=np.float64)
    c_in = np.asarray(coef, dtype=np.float64)
    flat = c_in.ndim == 1
    cdef const double[:, ::1] C = np.ascontiguousarray(c_in[:, None] if flat else c_in)
    cdef Py_ssize_t na = X.shape[0], nb = Y.shape[0], n = X.shape[1]
    cdef Py_ssize_t m = C.shape[1]
    cdef int p = dim - 2
    out = np.zeros((na, m), dtype=np.float64)
    cdef double[:, ::1] O = out
    cdef double[::1] xx = _sq(X)
    cdef double[::1] yy = _sq(Y)
    cdef Py_ssize_t i, j, k
    cdef double g
    with nogil:
        for i in range(na):
            for j in range(nb):
                g = _green(_dist2(X, Y, i, j, n), (1.0 - xx[i]) * (1.0 - yy[j]), p)
                if g == INFINITY:
                    for k in range(m):
                        if C[j, k] != 0.0:
                            O[i, k] = INFINITY
                    continue
                for k in range(m):
                    O[i, k] += g * C[j, k]
    return out[:, 0] if flat else out


def smoothed_block(xs, rho, int dim):
    cdef const double[:, ::1] X = np.ascontiguousarray(xs, dtype=np.float64)
    cdef const double[::1] R = np.ascontiguousarray(rho, dtype=np.float64)
    cdef Py_ssize_t N = X.shape[0], n = X.shape[1]
    cdef int p = dim - 2
    out = np.empty((N, N), dtype=np.float64)
    cdef double[:, ::1] O = out
    cdef double[::1] xx = _sq(X)
    cdef Py_ssize_t i, j
    cdef double r, v
    with nogil:
        for i in range(N):
            O[i, i] = 0.0
            for j in range(i + 1, N):
                r = R[i] if R[i] > R[j] else R[j]
                v = _smoothed(_dist2(X, X, i, j, n), (1.0 - xx[i]) * (1.0 - xx[j]), r, p, dim)
                O[i, j] = v
                O[j, i] = v
    return out


def smoothed_apply(xs, rho, coef, int dim):
    cdef const double[:, ::1] X = np.ascontiguousarray(xs, dtype=np.float64)
    cdef const double[::1] R = np.ascontiguousarray(rho, dtype=np.float64)
    c_in = np.asarray(coef, dtype=np.float64)
    flat = c_in.ndim == 1
    cdef const double[:, ::1] C = np.ascontiguousarray(c_in[:, None] if flat else c_in)
    cdef Py_ssize_t N = X.shape[0], n = X.shape[1], m = C.shape[1]
    cdef int p = dim - 2
    out = np.zeros((N, m), dtype=np.float64)
    cdef double[:, ::1] O = out
    cdef double[::1] xx = _sq(X)
    cdef Py_ssize_t i, j, k
    cdef double r, v
    with nogil:
        for i in range(N):
            for j in range(N):
                if i == j:
                    continue
                r = R[i] if R[i] > R[j] else R[j]
                v = _smoothed(_dist2(X, X, i, j, n), (1.0 - xx[i]) * (1.0 - xx[j]), r, p, dim)
                if v == INFINITY:
                    for k in range(m):
                        if C[j, k] != 0.0:
                            O[i, k] = INFINITY
                    continue
                for k in range(m):
                    O[i, k] += v * C[j, k]
    return out[:, 0] if flat else out


def poisson_block(xs, zs, int dim):
    cdef const double[:, ::1] X = np.ascontiguousarray(xs, dtype=np.float64)
    cdef const double[:, ::1] Z = np.ascontiguousarray(zs, dtype=np.float64)
    cdef Py_ssize_t na = X.shape[0], nb = Z.shape[0], n = X.shape[1]
    out = np.empty((na, nb), dtype=np.float64)
    cdef double[:, ::1] O = out
    cdef double[::1] xx = _sq(X)
    cdef Py_ssize_t i, j
    cdef double half = 0.5 * dim
    with nogil:
        for i in range(na):
            for j in range(nb):
                O[i, j] = (1.0 - xx[i]) / pow(_dist2(X, Z, i, j, n), half)
    return out
