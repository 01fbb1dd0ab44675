"""Causal polytope membership, causal bounds of games, and quantum seesaw values.

A causal table is written as a sum of nonnegative unnormalized branch tables.
For two parties there is one branch per first party i; W_i must not let the
second party signal to i. For three parties there is one branch W_ij per
ordered pair (i first, j second). The constraints are

(a) the branches sum to the table;
(b) for each first party i, sum_j W_ij marginalized over everyone but i does
    not depend on the other parties' settings;
(c) for each branch (i, j) with last party k, W_ij marginalized over o_k does
    not depend on s_k.

Conditional weights that depend on earlier outcomes are absorbed into the
unnormalized branches, which makes the set a polytope and the test an LP.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .choi import Instrument, measure_prepare
from .config import DEFAULT_TOLERANCES, SolverBudgets
from .correlations import ProbabilityTable, Scenario
from .lp import LinearProgram, solve
from .procmat import ProcessMatrix
from .reports import FEASIBLE, INFEASIBLE, FeasibilityReport, fraction_str

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# games


@dataclass(frozen=True)
class Game:
    """Payoff g(s, o) and setting distribution pi(s); value = sum pi g p."""

    scenario: Scenario
    payoff: np.ndarray = field(repr=False)
    distribution: np.ndarray = field(repr=False)

    def __post_init__(self):
        pay = np.asarray(self.payoff)
        dist = np.asarray(self.distribution)
        if pay.shape != self.scenario.shape:
            raise ValueError("payoff shape must equal the scenario shape")
        if dist.shape != self.scenario.settings:
            raise ValueError("distribution shape must equal the settings shape")
        if abs(float(np.sum(dist.astype(float))) - 1) > 1e-12 or np.any(dist.astype(float) < 0):
            raise ValueError("setting distribution must be a probability distribution")
        object.__setattr__(self, "payoff", pay)
        object.__setattr__(self, "distribution", dist)

    def weights(self, exact: bool = False) -> np.ndarray:
        """pi(s) g(s, o) as one array over (settings, outcomes)."""
        n = self.scenario.n
        dist = self.distribution.reshape(self.scenario.settings + (1,) * n)
        if exact:
            pay = np.vectorize(_to_fraction, otypes=[object])(self.payoff)
            dist = np.vectorize(_to_fraction, otypes=[object])(dist)
            return pay * dist
        return self.payoff.astype(float) * dist.astype(float)

    def value(self, t: ProbabilityTable) -> float:
        if t.scenario != self.scenario:
            raise ValueError("table and game scenarios differ")
        return float(np.sum(self.weights() * t.p))

    def to_dict(self) -> dict:
        conv = np.vectorize(lambda v: fraction_str(v) if isinstance(v, Fraction) else float(v),
                            otypes=[object])
        return {"scenario": self.scenario.to_dict(), "payoff": conv(self.payoff).tolist(),
                "distribution": conv(self.distribution).tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Game":
        sc = Scenario.from_dict(data["scenario"])
        parse = np.vectorize(_parse_number, otypes=[object])
        pay = parse(np.array(data["payoff"], dtype=object))
        if "distribution" in data:
            dist = parse(np.array(data["distribution"], dtype=object))
        else:
            k = int(np.prod(sc.settings))
            dist = np.full(sc.settings, Fraction(1, k), dtype=object)
        return cls(sc, pay, dist)


def _parse_number(v):
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, int):
        return Fraction(v)
    return float(v)


def _to_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    return Fraction(float(v)).limit_denominator(10 ** 12)


def ocb_game() -> Game:
    """Alice guesses Bob's bit b or Bob guesses Alice's bit a, as chosen by Bob's bit b'.

    Alice: setting a in {0, 1}, outcome x. Bob: setting index 2 b + b', outcome y.
    Success when b' = 0 and x = b, or b' = 1 and y = a; settings uniform.
    """
    sc = Scenario(("A", "B"), (2, 4), (2, 2))
    pay = np.empty(sc.shape, dtype=object)
    for a, sb, x, y in itertools.product(range(2), range(4), range(2), range(2)):
        b, bp = divmod(sb, 2)
        win = (bp == 0 and x == b) or (bp == 1 and y == a)
        pay[a, sb, x, y] = Fraction(int(win))
    dist = np.full((2, 4), Fraction(1, 8), dtype=object)
    return Game(sc, pay, dist)


# ---------------------------------------------------------------------------
# constraint construction


def _branches(n: int, orders=None) -> list[tuple[int, ...]]:
    if n == 2:
        full = [(0,), (1,)]
    elif n == 3:
        full = [(i, j) for i in range(3) for j in range(3) if i != j]
    else:
        raise NotImplementedError(f"causal polytope for {n} parties is not implemented (n <= 3)")
    if orders is None:
        return full
    chosen = [tuple(o) for o in orders]
    for o in chosen:
        if o not in full:
            raise ValueError(f"unknown branch {o}")
    return chosen


def _independence_rows(index: np.ndarray, n: int, free: Sequence[int], summed: Sequence[int]):
    """Rows asserting that sum over outcome axes ``summed`` is constant across settings ``free``.

    ``index`` maps table cells to variable numbers. Yields lists of
    (variable, coefficient).
    """
    free = list(free)
    summed = [n + k for k in summed]
    kept = [a for a in range(2 * n) if a not in free and a not in summed]
    t = index.transpose(kept + free + summed)
    K = int(np.prod([index.shape[a] for a in kept])) if kept else 1
    F = int(np.prod([index.shape[a] for a in free])) if free else 1
    S = int(np.prod([index.shape[a] for a in summed])) if summed else 1
    t = t.reshape(K, F, S)
    for k in range(K):
        for f in range(1, F):
            yield [(int(v), 1) for v in t[k, f]] + [(int(v), -1) for v in t[k, 0]]


class _Builder:
    def __init__(self, scenario: Scenario, branches):
        self.sc = scenario
        self.branches = branches
        self.N = int(np.prod(scenario.shape))
        self.nvar = self.N * len(branches)
        self.rows: list[list[tuple[int, int]]] = []
        self.rhs: list = []

    def index(self, b: int) -> np.ndarray:
        return np.arange(b * self.N, (b + 1) * self.N).reshape(self.sc.shape)

    def add(self, row, rhs=0):
        self.rows.append(row)
        self.rhs.append(rhs)

    def causal_constraints(self):
        n = self.sc.n
        for first in range(n):
            group = [b for b, br in enumerate(self.branches) if br[0] == first]
            if not group:
                continue
            others = [k for k in range(n) if k != first]
            per_branch = [list(_independence_rows(self.index(b), n, others, others)) for b in group]
            for rows in zip(*per_branch):
                self.add([entry for row in rows for entry in row])
        if n == 3:
            for b, (i, j) in enumerate(self.branches):
                k = 3 - i - j
                for row in _independence_rows(self.index(b), n, [k], [k]):
                    self.add(row)

    def matrix(self, exact: bool):
        A = (np.zeros((len(self.rows), self.nvar), dtype=object) if exact
             else np.zeros((len(self.rows), self.nvar)))
        if exact:
            A[:] = 0
        for r, row in enumerate(self.rows):
            for v, c in row:
                A[r, v] += c
        return A

    def split(self, x) -> dict[str, np.ndarray]:
        x = np.asarray(x, dtype=object if isinstance(x[0], Fraction) else float)
        names = self.sc.parties
        return {"".join(names[k] for k in br): x[b * self.N:(b + 1) * self.N].reshape(self.sc.shape)
                for b, br in enumerate(self.branches)}


def _exact_table(t: ProbabilityTable) -> np.ndarray:
    """Rational copy of a float table, each setting row renormalized to sum to exactly one."""
    n = t.n
    p = np.vectorize(_to_fraction, otypes=[object])(t.p)
    sums = p.sum(axis=tuple(range(n, 2 * n)))
    return p / sums.reshape(sums.shape + (1,) * n)


# ---------------------------------------------------------------------------
# membership and bounds


@dataclass
class CausalWitness:
    scenario: Scenario
    branches: dict[str, np.ndarray]

    def reconstruct(self) -> np.ndarray:
        return sum(self.branches.values())


def check_witness(t: ProbabilityTable, branches: dict[str, np.ndarray], tol: float = 1e-8) -> list[str]:
    """Independent check of a branch decomposition; returns the violated conditions."""
    sc, n = t.scenario, t.n
    problems = []
    arr = {k: np.asarray(v, dtype=float) for k, v in branches.items()}
    if any(v.min() < -tol for v in arr.values()):
        problems.append("negative branch entry")
    if np.max(np.abs(sum(arr.values()) - t.p)) > tol:
        problems.append("branches do not sum to the table")

    def spread(x, axes):
        return float((x.max(axis=tuple(axes)) - x.min(axis=tuple(axes))).max()) if axes else 0.0

    names = sc.parties
    for i, first in enumerate(names):
        group = [v for k, v in arr.items() if k[0] == first]
        if not group:
            continue
        others = [k for k in range(n) if k != i]
        marg = sum(group).sum(axis=tuple(n + k for k in others), keepdims=True)
        if spread(marg, others) > tol:
            problems.append(f"branch weight for {first} first depends on other settings")
    if n == 3:
        for key, v in arr.items():
            i, j = names.index(key[0]), names.index(key[1])
            k = 3 - i - j
            marg = v.sum(axis=n + k, keepdims=True)
            if spread(marg, [k]) > tol:
                problems.append(f"branch {key}: last party {names[k]} signals backwards")
    return problems


def causal_membership(t: ProbabilityTable, exact: bool = False, orders=None,
                      tol: float = DEFAULT_TOLERANCES.lp_feasibility,
                      backend: str | None = None) -> FeasibilityReport:
    """Decide whether ``t`` lies in the causal polytope; feasible reports carry branch tables."""
    n = t.n
    if n == 1:
        return FeasibilityReport(FEASIBLE, blocks={t.scenario.parties[0]: t.p.copy()}, exact=exact)
    builder = _Builder(t.scenario, _branches(n, orders))
    p = _exact_table(t) if exact else t.p
    for cell in range(builder.N):
        builder.add([(b * builder.N + cell, 1) for b in range(len(builder.branches))],
                    p.reshape(-1)[cell])
    builder.causal_constraints()
    lp = LinearProgram(builder.matrix(exact), builder.rhs, [0] * builder.nvar)
    res = solve(lp, exact=exact, tol=tol, backend=backend)
    if res.status == "optimal":
        blocks = builder.split(res.x)
        problems = check_witness(t, blocks, 1e-8)
        if problems:
            log.warning("witness failed re-validation: %s", problems)
        return FeasibilityReport(FEASIBLE, blocks=blocks, exact=exact, iterations=res.iterations,
                                 detail={"witness_problems": problems} if problems else {})
    if res.status == "infeasible":
        return FeasibilityReport(INFEASIBLE, margin=float(res.infeasibility), exact=exact,
                                 iterations=res.iterations,
                                 certificate={"kind": "farkas" if not exact else "exact-farkas",
                                              "value": fraction_str(res.infeasibility) if exact
                                              else float(res.infeasibility)})
    raise RuntimeError(f"LP ended with status {res.status}")


@dataclass
class BoundResult:
    value: float | Fraction
    exact: bool
    table: np.ndarray | None = field(default=None, repr=False)
    iterations: int = 0

    def to_dict(self) -> dict:
        return {"bound": fraction_str(self.value) if self.exact else float(self.value),
                "exact": self.exact}


def causal_bound(g: Game, exact: bool = False, orders=None,
                 tol: float = DEFAULT_TOLERANCES.lp_feasibility, backend: str | None = None) -> BoundResult:
    """Maximum game value over causal tables (optionally over a subset of branches)."""
    n = g.scenario.n
    builder = _Builder(g.scenario, _branches(n, orders))
    nb = len(builder.branches)
    settings = int(np.prod(g.scenario.settings))
    outs = int(np.prod(g.scenario.outcomes))
    for s in range(settings):
        row = [(b * builder.N + s * outs + o, 1) for b in range(nb) for o in range(outs)]
        builder.add(row, 1)
    builder.causal_constraints()
    weights = g.weights(exact).reshape(-1)
    c = np.concatenate([weights] * nb)
    lp = LinearProgram(builder.matrix(exact), builder.rhs, list(c), maximize=True)
    res = solve(lp, exact=exact, tol=tol, backend=backend)
    if res.status == "unbounded":
        raise RuntimeError("causal bound LP unbounded: constraint construction is broken")
    if res.status != "optimal":
        raise RuntimeError(f"causal bound LP ended with status {res.status}")
    table = sum(builder.split(res.x).values())
    return BoundResult(res.objective, exact, table, res.iterations)


# ---------------------------------------------------------------------------
# seesaw over measure-and-prepare strategies


@dataclass
class QuantumValueResult:
    value: float
    instruments: list[list[Instrument]] = field(repr=False)
    table: ProbabilityTable = field(repr=False)
    sweeps: int = 0
    converged: bool = True
    history: list[float] = field(default_factory=list, repr=False)


def _random_povm(d: int, k: int, rng) -> list[np.ndarray]:
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, _ = np.linalg.qr(z)
    labels = rng.integers(0, k, size=d)
    return [sum((np.outer(q[:, i], q[:, i].conj()) for i in range(d) if labels[i] == o),
                np.zeros((d, d), complex)) for o in range(k)]


def _random_pure(d: int, rng) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def _psd_sqrt(m):
    vals, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    return (vecs * np.sqrt(np.clip(vals, 0, None))) @ vecs.conj().T


def _improve_povm(G: list[np.ndarray], E: list[np.ndarray]) -> list[np.ndarray]:
    """Pairwise monotone update: reoptimize E_a, E_b within their fixed sum."""
    E = list(E)
    k = len(E)
    for a, b in itertools.combinations(range(k), 2):
        S = E[a] + E[b]
        r = _psd_sqrt(S)
        D = r @ (G[a] - G[b]) @ r
        vals, vecs = np.linalg.eigh((D + D.conj().T) / 2)
        P = (vecs[:, vals > 0]) @ vecs[:, vals > 0].conj().T
        E[a] = r @ P @ r
        E[b] = S - E[a]
    return E


class _Strategy:
    def __init__(self, w: ProcessMatrix, g: Game, rng):
        self.w, self.g = w, g
        self.sc = g.scenario
        self.c = g.weights()
        self.povm = []
        self.prep = []
        for party, ns, no in zip(w.parties, self.sc.settings, self.sc.outcomes):
            self.povm.append([_random_povm(party.d_in, no, rng) for _ in range(ns)])
            self.prep.append([[_random_pure(party.d_out, rng) for _ in range(no)] for _ in range(ns)])

    def stack(self, k: int) -> np.ndarray:
        """CJ operators of party k with shape (settings, outcomes, D, D)."""
        return np.array([[np.kron(E, r.T) for E, r in zip(self.povm[k][s], self.prep[k][s])]
                         for s in range(self.sc.settings[k])])

    def effective(self, k: int) -> np.ndarray:
        """K[s_k, o_k] with value = sum Tr[K M^k] for party k's operators."""
        w, n = self.w, self.sc.n
        dims = [p.dim for p in w.parties]
        t = w.matrix.reshape(dims + dims)
        L = "abcdefghijklmnopqrstuvwxyz"
        rows, cols = L[:n], L[n:2 * n]
        sets, outs = L[2 * n:3 * n], L[3 * n:4 * n]
        ops, specs = [t, self.c], [rows + cols, sets + outs]
        for l in range(n):
            if l != k:
                ops.append(self.stack(l))
                specs.append(sets[l] + outs[l] + cols[l] + rows[l])
        spec = ",".join(specs) + "->" + sets[k] + outs[k] + rows[k] + cols[k]
        return np.einsum(spec, *ops, optimize=True)

    def value(self) -> float:
        K = self.effective(0)
        return float(np.einsum("soij,soji->", K, self.stack(0)).real)

    def update(self, k: int):
        K = self.effective(k)
        party = self.w.parties[k]
        di, do = party.d_in, party.d_out
        for s in range(self.sc.settings[k]):
            Ks = K[s].reshape(-1, di, do, di, do)
            G = [np.einsum("iajb,ba->ij", Ks[o], self.prep[k][s][o].T) for o in range(len(Ks))]
            self.povm[k][s] = _improve_povm(G, self.povm[k][s])
            for o in range(len(Ks)):
                H = np.einsum("iajb,ji->ab", Ks[o], self.povm[k][s][o])
                vals, vecs = np.linalg.eigh((H + H.conj().T) / 2)
                v = vecs[:, -1]
                # Tr[H rho^T] is maximized by rho^T = |v><v|
                self.prep[k][s][o] = np.outer(v, v.conj()).T

    def instruments(self) -> list[list[Instrument]]:
        out = []
        for k, party in enumerate(self.w.parties):
            out.append([measure_prepare(party, self.povm[k][s], self.prep[k][s], tol=1e-7)
                        for s in range(self.sc.settings[k])])
        return out


def optimize_quantum_value(w: ProcessMatrix, g: Game, budgets: SolverBudgets = SolverBudgets(),
                           seed: int = 0, restarts: int | None = None,
                           tol: float = 1e-12) -> QuantumValueResult:
    """Seesaw over per-setting measure-and-prepare instruments.

    Each step reoptimizes one party's POVMs (pairwise eigenprojector update)
    and then its preparations (top eigenvectors) with the others fixed, so the
    value never decreases within a restart. The best restart is returned.
    """
    from .procmat import probability_table

    if w.names != g.scenario.parties:
        raise ValueError("process matrix and game must list the same parties in order")
    rng = np.random.default_rng(seed)
    best = None
    for r in range(restarts or budgets.seesaw_restarts):
        st = _Strategy(w, g, rng)
        history = [st.value()]
        converged = False
        for sweep in range(budgets.seesaw_sweeps):
            for k in range(g.scenario.n):
                st.update(k)
            history.append(st.value())
            if history[-1] - history[-2] < tol:
                converged = True
                break
        if best is None or history[-1] > best[0]:
            best = (history[-1], st, len(history) - 1, converged, history)
    value, st, sweeps, converged, history = best
    insts = st.instruments()
    table = probability_table(w, insts)
    return QuantumValueResult(g.value(table), insts, table, sweeps, converged, history)
