# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled revised-simplex iteration loop (Bland's rule, explicit basis inverse)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def iterate(double[:, ::1] A, double[::1] c, double[:, ::1] Binv, double[::1] xB,
            cnp.int64_t[::1] basis, cnp.int64_t[::1] position, cnp.uint8_t[::1] eligible,
            double tol, long max_iter):
    """Run at most ``max_iter`` pivots in place.

    Returns (status, iterations) with status 0 = optimal, 1 = unbounded,
    2 = iteration budget exhausted.
    """
    cdef Py_ssize_t m = A.shape[0]
    cdef Py_ssize_t n = A.shape[1]
    cdef double[::1] y = np.empty(m)
    cdef double[::1] u = np.empty(m)
    cdef Py_ssize_t i, k, j, enter, leave
    cdef long it = 0
    cdef double d, ratio, best, piv, f
    while it < max_iter:
        # y = c_B B^{-1}
        for k in range(m):
            y[k] = 0.0
        for i in range(m):
            f = c[basis[i]]
            if f != 0.0:
                for k in range(m):
                    y[k] += f * Binv[i, k]
        # Bland pricing: first eligible nonbasic column with negative reduced cost
        enter = -1
        for j in range(n):
            if position[j] >= 0 or not eligible[j]:
                continue
            d = c[j]
            for k in range(m):
                d -= y[k] * A[k, j]
            if d < -tol:
                enter = j
                break
        if enter < 0:
            return 0, it
        for i in range(m):
            f = 0.0
            for k in range(m):
                f += Binv[i, k] * A[k, enter]
            u[i] = f
        leave = -1
        best = 0.0
        for i in range(m):
            if u[i] > tol:
                ratio = xB[i] / u[i]
                if leave < 0 or ratio < best - 1e-12:
                    leave = i
                    best = ratio
                elif fabs(ratio - best) <= 1e-12 and basis[i] < basis[leave]:
                    leave = i
                    best = ratio
        if leave < 0:
            return 1, it
        piv = u[leave]
        for k in range(m):
            Binv[leave, k] /= piv
        xB[leave] /= piv
        for i in range(m):
            if i == leave:
                continue
            f = u[i]
            if f != 0.0:
                for k in range(m):
                    Binv[i, k] -= f * Binv[leave, k]
                xB[i] -= f * xB[leave]
                if xB[i] < 0.0 and xB[i] > -tol:
                    xB[i] = 0.0
        position[basis[leave]] = -1
        basis[leave] = enter
        position[enter] = leave
        it += 1
    return 2, it
