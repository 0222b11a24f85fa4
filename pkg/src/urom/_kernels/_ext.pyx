# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twin of urom._kernels.pure (projected extragradient, affine operator)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdlib cimport free, malloc

PROJ_WHOLE = 0
PROJ_BOX = 1
PROJ_BALL = 2
PROJ_SIMPLEX = 3

cdef int K_WHOLE = 0
cdef int K_BOX = 1
cdef int K_BALL = 2
cdef int K_SIMPLEX = 3


cdef void _matvec(double[:, ::1] A, double* x, double* out, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += A[i, j] * x[j]
        out[i] = acc


cdef double _bnorm(double[:, ::1] B, double* v, double* tmp, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0
    _matvec(B, v, tmp, n)
    for i in range(n):
        acc += v[i] * tmp[i]
    if acc < 0.0:
        acc = 0.0
    return sqrt(acc)


cdef void _proj_simplex(double* z, double[::1] w, double* out, Py_ssize_t* order,
                        double* b, double* cy, double* ci, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j, k, tmp
    cdef double lam, cand
    for i in range(n):
        b[i] = w[i] * z[i]
        order[i] = i
    # stable insertion sort of indices by b descending
    for i in range(1, n):
        j = i
        while j > 0 and b[order[j - 1]] < b[order[j]]:
            tmp = order[j - 1]
            order[j - 1] = order[j]
            order[j] = tmp
            j -= 1
    cy[0] = z[order[0]]
    ci[0] = 1.0 / w[order[0]]
    for i in range(1, n):
        cy[i] = cy[i - 1] + z[order[i]]
        ci[i] = ci[i - 1] + 1.0 / w[order[i]]
    k = n
    for i in range(n):
        cand = (cy[i] - 1.0) / ci[i]
        if cand < b[order[i]] and (i + 1 == n or cand >= b[order[i + 1]]):
            k = i + 1
            break
    lam = (cy[k - 1] - 1.0) / ci[k - 1]
    for i in range(n):
        cand = z[i] - lam / w[i]
        out[i] = cand if cand > 0.0 else 0.0


cdef void _project(int kind, double* z, double* out, Py_ssize_t n,
                   double[::1] lo, double[::1] hi, double[::1] center, double radius,
                   double[::1] w, double[:, ::1] B, double* t1, double* t2,
                   Py_ssize_t* order, double* b, double* cy, double* ci) noexcept nogil:
    cdef Py_ssize_t i
    cdef double nd, s
    if kind == K_WHOLE:
        for i in range(n):
            out[i] = z[i]
    elif kind == K_BOX:
        for i in range(n):
            out[i] = z[i]
            if out[i] < lo[i]:
                out[i] = lo[i]
            if out[i] > hi[i]:
                out[i] = hi[i]
    elif kind == K_BALL:
        for i in range(n):
            t1[i] = z[i] - center[i]
        nd = _bnorm(B, t1, t2, n)
        if nd <= radius:
            for i in range(n):
                out[i] = z[i]
        else:
            s = radius / nd
            for i in range(n):
                out[i] = center[i] + s * t1[i]
    else:
        _proj_simplex(z, w, out, order, b, cy, ci, n)


def extragradient_affine(double[:, ::1] G, double[::1] c, double[::1] xc,
                         double[:, ::1] B, double[:, ::1] Binv,
                         int proj_kind, double[::1] lo, double[::1] hi,
                         double[::1] center, double radius, double[::1] w,
                         double[::1] y0, double gamma, double tol, long max_iters):
    """See urom._kernels.pure.extragradient_affine (identical contract)."""
    cdef Py_ssize_t n = y0.shape[0]
    cdef Py_ssize_t i, it = 0
    cdef double res, best_res
    cdef bint converged = 0
    cdef double* y = <double*> malloc(9 * n * sizeof(double))
    cdef double* besty = y + n
    cdef double* F = y + 2 * n
    cdef double* t1 = y + 3 * n
    cdef double* t2 = y + 4 * n
    cdef double* z = y + 5 * n
    cdef double* sb = y + 6 * n
    cdef double* scy = y + 7 * n
    cdef double* sci = y + 8 * n
    cdef Py_ssize_t* order = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    if y == NULL or order == NULL:
        free(y)
        free(order)
        raise MemoryError()
    best_res = float("inf")
    res = 0.0
    with nogil:
        for i in range(n):
            y[i] = y0[i]
            besty[i] = y0[i]
        while True:
            # F = Binv (c + G (y - xc))
            for i in range(n):
                t1[i] = y[i] - xc[i]
            _matvec(G, t1, t2, n)
            for i in range(n):
                t2[i] += c[i]
            _matvec(Binv, t2, F, n)
            # natural residual at unit step
            for i in range(n):
                z[i] = y[i] - F[i]
            _project(proj_kind, z, t1, n, lo, hi, center, radius, w, B, t2, sb, order, sb, scy, sci)
            for i in range(n):
                t1[i] = y[i] - t1[i]
            res = _bnorm(B, t1, t2, n)
            if res < best_res:
                best_res = res
                for i in range(n):
                    besty[i] = y[i]
            if res <= tol:
                converged = 1
                break
            if it >= max_iters:
                break
            # half step then full step
            for i in range(n):
                z[i] = y[i] - gamma * F[i]
            _project(proj_kind, z, t1, n, lo, hi, center, radius, w, B, t2, sb, order, sb, scy, sci)
            for i in range(n):
                t2[i] = t1[i] - xc[i]
            _matvec(G, t2, z, n)
            for i in range(n):
                z[i] += c[i]
            _matvec(Binv, z, F, n)
            for i in range(n):
                z[i] = y[i] - gamma * F[i]
            _project(proj_kind, z, y, n, lo, hi, center, radius, w, B, t1, t2, order, sb, scy, sci)
            it += 1
    if converged:
        out = np.empty(n)
        for i in range(n):
            out[i] = y[i]
        free(y)
        free(order)
        return out, res, it, True
    out = np.empty(n)
    for i in range(n):
        out[i] = besty[i]
    free(y)
    free(order)
    return out, best_res, it, False
