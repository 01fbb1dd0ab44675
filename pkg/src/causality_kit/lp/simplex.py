"""Two-phase revised simplex for equality-form linear programs.

Problems are stated as

    minimize (or maximize)  c . x   subject to   A x = b,  x >= 0.

Entering and leaving variables follow Bland's rule, which rules out cycling
on degenerate problems. Phase 1 minimizes the sum of one artificial variable
per row; artificials left in the basis at level zero are pivoted out where
possible, and otherwise sit on redundant rows where they can never move.

Two arithmetic backends share this driver: floating point (with a compiled
iteration loop when available) and exact rationals via ``fractions``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..config import DEFAULT_TOLERANCES

try:
    from . import _kernel as _compiled
    KERNEL_BACKEND = "cython"
except ImportError:  # extension not built
    _compiled = None
    KERNEL_BACKEND = "numpy"

from . import _kernel_py

log = logging.getLogger(__name__)

_REFACTOR_PERIOD = 200


@dataclass
class LinearProgram:
    A: Sequence[Sequence]
    b: Sequence
    c: Sequence
    maximize: bool = False

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.b), len(self.c)


@dataclass
class LPResult:
    status: str  # "optimal", "infeasible", "unbounded", "iteration_limit"
    x: list | np.ndarray | None = None
    objective: float | Fraction | None = None
    infeasibility: float | Fraction = 0
    dual: list | np.ndarray | None = field(default=None, repr=False)
    iterations: int = 0

    @property
    def feasible(self) -> bool:
        return self.status in ("optimal", "unbounded")


def _kernel(backend: str | None):
    backend = backend or KERNEL_BACKEND
    if backend == "cython":
        if _compiled is None:
            raise RuntimeError("compiled simplex kernel is not available")
        return _compiled.iterate
    if backend == "numpy":
        return _kernel_py.iterate
    raise ValueError(f"unknown kernel backend {backend!r}")


# ---------------------------------------------------------------------------
# floating point


def _solve_float(lp: LinearProgram, tol: float, max_iter: int, backend: str | None) -> LPResult:
    iterate = _kernel(backend)
    A0 = np.asarray(lp.A, dtype=float)
    b0 = np.asarray(lp.b, dtype=float).copy()
    c0 = np.asarray(lp.c, dtype=float)
    if lp.maximize:
        c0 = -c0
    m, n = A0.shape
    sign = np.where(b0 < 0, -1.0, 1.0)
    A = np.ascontiguousarray(np.hstack([A0 * sign[:, None], np.eye(m)]))
    b = b0 * sign
    basis = np.arange(n, n + m, dtype=np.int64)
    position = -np.ones(n + m, dtype=np.int64)
    position[basis] = np.arange(m)
    Binv = np.eye(m)
    xB = b.copy()
    total = 0

    def run(cost, eligible):
        nonlocal Binv, xB, total
        while True:
            budget = min(_REFACTOR_PERIOD, max_iter - total)
            if budget <= 0:
                return 2
            status, it = iterate(A, cost, Binv, xB, basis, position, eligible, tol, budget)
            total += it
            # refactorize to limit drift from repeated rank-one updates
            try:
                Binv = np.ascontiguousarray(np.linalg.inv(A[:, basis]))
                xB = np.ascontiguousarray(Binv @ b)
                xB[(xB < 0) & (xB > -tol)] = 0.0
            except np.linalg.LinAlgError:
                log.warning("basis matrix singular at refactorization; keeping updated inverse")
            if status != 2:
                return status

    cost1 = np.concatenate([np.zeros(n), np.ones(m)])
    status = run(cost1, np.ones(n + m, dtype=np.uint8))
    if status == 2:
        return LPResult("iteration_limit", iterations=total)
    phase1 = float(cost1[basis] @ xB)
    y1 = (cost1[basis] @ Binv) * sign
    if phase1 > tol * max(1.0, float(np.abs(b).max(initial=0.0))):
        return LPResult("infeasible", infeasibility=phase1, dual=y1, iterations=total)

    # drive zero-level artificials out of the basis
    for i in range(m):
        if basis[i] < n:
            continue
        row = Binv[i] @ A[:, :n]
        row[position[:n] >= 0] = 0.0
        j = int(np.argmax(np.abs(row)))
        if abs(row[j]) > 1e-9:
            u = Binv @ A[:, j]
            piv = u[i]
            Binv[i] /= piv
            xB[i] /= piv
            others = np.arange(m) != i
            Binv[others] -= np.outer(u[others], Binv[i])
            xB[others] -= u[others] * xB[i]
            position[basis[i]] = -1
            basis[i] = j
            position[j] = i

    cost2 = np.concatenate([c0, np.zeros(m)])
    eligible = np.concatenate([np.ones(n, dtype=np.uint8), np.zeros(m, dtype=np.uint8)])
    status = run(cost2, eligible)
    if status == 2:
        return LPResult("iteration_limit", iterations=total)
    x = np.zeros(n + m)
    x[basis] = xB
    y = (cost2[basis] @ Binv) * sign
    if status == 1:
        return LPResult("unbounded", x=x[:n], iterations=total)
    obj = float(c0 @ x[:n])
    return LPResult("optimal", x[:n], -obj if lp.maximize else obj, 0.0,
                    -y if lp.maximize else y, total)


# ---------------------------------------------------------------------------
# exact rationals


def _solve_exact(lp: LinearProgram, max_iter: int) -> LPResult:
    b0 = [Fraction(v) for v in lp.b]
    c0 = [Fraction(v) for v in lp.c]
    if lp.maximize:
        c0 = [-v for v in c0]
    m, n = len(b0), len(c0)
    sign = [-1 if v < 0 else 1 for v in b0]
    # sparse columns: list of (row, value)
    cols: list[list[tuple[int, Fraction]]] = [[] for _ in range(n + m)]
    for i, row in enumerate(lp.A):
        if len(row) != n:
            raise ValueError("constraint row length does not match objective length")
        for j, v in enumerate(row):
            if v:
                cols[j].append((i, Fraction(v) * sign[i]))
    for i in range(m):
        cols[n + i].append((i, Fraction(1)))
    b = [v * s for v, s in zip(b0, sign)]
    basis = list(range(n, n + m))
    position = [-1] * (n + m)
    for i, j in enumerate(basis):
        position[j] = i
    Binv = [[Fraction(int(i == k)) for k in range(m)] for i in range(m)]
    xB = list(b)
    total = 0
    zero = Fraction(0)

    def column(j):
        u = [zero] * m
        for r, v in cols[j]:
            for i in range(m):
                bi = Binv[i][r]
                if bi:
                    u[i] += bi * v
        return u

    def pivot(leave, enter, u):
        piv = u[leave]
        row = [v / piv for v in Binv[leave]]
        Binv[leave] = row
        xB[leave] = xB[leave] / piv
        for i in range(m):
            f = u[i]
            if i != leave and f:
                Bi = Binv[i]
                for k in range(m):
                    if row[k]:
                        Bi[k] -= f * row[k]
                xB[i] -= f * xB[leave]
        position[basis[leave]] = -1
        basis[leave] = enter
        position[enter] = leave

    def run(cost, eligible):
        nonlocal total
        while total < max_iter:
            y = [zero] * m
            for i in range(m):
                f = cost[basis[i]]
                if f:
                    Bi = Binv[i]
                    for k in range(m):
                        if Bi[k]:
                            y[k] += f * Bi[k]
            enter = -1
            for j in range(n + m):
                if position[j] >= 0 or not eligible[j]:
                    continue
                d = cost[j] - sum((y[r] * v for r, v in cols[j]), zero)
                if d < 0:
                    enter = j
                    break
            if enter < 0:
                return 0, y
            u = column(enter)
            leave, best = -1, None
            for i in range(m):
                if u[i] > 0:
                    ratio = xB[i] / u[i]
                    if leave < 0 or ratio < best or (ratio == best and basis[i] < basis[leave]):
                        leave, best = i, ratio
            if leave < 0:
                return 1, y
            pivot(leave, enter, u)
            total += 1
        return 2, None

    cost1 = [zero] * n + [Fraction(1)] * m
    status, y1 = run(cost1, [True] * (n + m))
    if status == 2:
        return LPResult("iteration_limit", iterations=total)
    phase1 = sum((cost1[basis[i]] * xB[i] for i in range(m)), zero)
    if phase1 > 0:
        return LPResult("infeasible", infeasibility=phase1,
                        dual=[v * s for v, s in zip(y1, sign)], iterations=total)
    for i in range(m):
        if basis[i] < n:
            continue
        for j in range(n):
            if position[j] >= 0:
                continue
            if sum((Binv[i][r] * v for r, v in cols[j]), zero):
                pivot(i, j, column(j))
                break
    cost2 = c0 + [zero] * m
    status, y2 = run(cost2, [True] * n + [False] * m)
    if status == 2:
        return LPResult("iteration_limit", iterations=total)
    x = [zero] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = xB[i]
    if status == 1:
        return LPResult("unbounded", x=x, iterations=total)
    obj = sum((cv * xv for cv, xv in zip(c0, x)), zero)
    dual = [v * s for v, s in zip(y2, sign)]
    if lp.maximize:
        obj, dual = -obj, [-v for v in dual]
    return LPResult("optimal", x, obj, zero, dual, total)


def solve(lp: LinearProgram, exact: bool = False, tol: float = DEFAULT_TOLERANCES.lp_feasibility,
          max_iter: int = 50000, backend: str | None = None) -> LPResult:
    """Solve ``lp``; ``exact`` switches to rational arithmetic.

    ``backend`` picks the float iteration loop ("cython" or "numpy"); the
    default is the compiled loop when it was built.
    """
    m, n = lp.shape
    if m == 0:
        raise ValueError("linear program has no constraints")
    if exact:
        return _solve_exact(lp, max_iter)
    return _solve_float(lp, tol, max_iter, backend)
