"""Pure numpy twin of the compiled simplex iteration loop in ``_kernel.pyx``."""

from __future__ import annotations

import numpy as np


def iterate(A, c, Binv, xB, basis, position, eligible, tol, max_iter):
    """Run at most ``max_iter`` pivots in place; see the compiled version."""
    it = 0
    candidates = np.flatnonzero(eligible.astype(bool))
    while it < max_iter:
        y = c[basis] @ Binv
        free = candidates[position[candidates] < 0]
        d = c[free] - y @ A[:, free]
        neg = np.flatnonzero(d < -tol)
        if neg.size == 0:
            return 0, it
        enter = int(free[neg[0]])
        u = Binv @ A[:, enter]
        rows = np.flatnonzero(u > tol)
        if rows.size == 0:
            return 1, it
        ratios = xB[rows] / u[rows]
        leave, best = -1, 0.0
        for i, r in zip(rows, ratios):
            if leave < 0 or r < best - 1e-12:
                leave, best = int(i), r
            elif abs(r - best) <= 1e-12 and basis[i] < basis[leave]:
                leave, best = int(i), r
        piv = u[leave]
        Binv[leave] /= piv
        xB[leave] /= piv
        others = np.arange(len(u)) != leave
        Binv[others] -= np.outer(u[others], Binv[leave])
        xB[others] -= u[others] * xB[leave]
        xB[(xB < 0) & (xB > -tol)] = 0.0
        position[basis[leave]] = -1
        basis[leave] = enter
        position[enter] = leave
        it += 1
    return 2, it
