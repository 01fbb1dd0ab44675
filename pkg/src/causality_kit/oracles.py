"""Independent reference checks used by the tests and the acceptance suite.

These deliberately avoid the package's own solvers: the polytope oracle is a
convex-hull membership test over enumerated deterministic strategies solved
with scipy, and the fixed-order check is a plain loop over settings.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linprog

from .correlations import CausalConfiguration, ProbabilityTable, Scenario


def _functions(domain: int, codomain: int):
    return itertools.product(range(codomain), repeat=domain)


def one_way_vertices(scenario: Scenario) -> np.ndarray:
    """Deterministic bipartite strategies in which one party's outcome ignores the other.

    Returns an array of shape (n_vertices, table size); duplicates removed.
    For two settings and two outcomes each this gives 112 vertices.
    """
    if scenario.n != 2:
        raise ValueError("bipartite scenarios only")
    (sa, sb), (oa, ob) = scenario.settings, scenario.outcomes
    verts = set()
    for first in (0, 1):
        s1, s2 = (sa, sb) if first == 0 else (sb, sa)
        o1, o2 = (oa, ob) if first == 0 else (ob, oa)
        for f in _functions(s1, o1):
            for g in _functions(s1 * s2, o2):
                p = np.zeros(scenario.shape)
                for x, y in itertools.product(range(s1), range(s2)):
                    a, b = f[x], g[x * s2 + y]
                    if first == 0:
                        p[x, y, a, b] = 1
                    else:
                        p[y, x, b, a] = 1
                verts.add(tuple(p.reshape(-1).astype(int)))
    return np.array(sorted(verts), dtype=float)


def hull_membership(t: ProbabilityTable, vertices: np.ndarray | None = None) -> tuple[bool, float]:
    """Is ``t`` a convex combination of ``vertices``?

    Solves min sum(u + v) subject to V^T lam + u - v = p, sum lam = 1, all
    variables >= 0, and returns (distance <= 1e-9, l1 distance).
    """
    if vertices is None:
        vertices = one_way_vertices(t.scenario)
    p = np.asarray(t.p, dtype=float).reshape(-1)
    k, m = vertices.shape
    A = np.hstack([vertices.T, np.eye(m), -np.eye(m)])
    A = np.vstack([A, np.concatenate([np.ones(k), np.zeros(2 * m)])])
    b = np.concatenate([p, [1.0]])
    c = np.concatenate([np.zeros(k), np.ones(2 * m)])
    res = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"oracle LP failed: {res.message}")
    return bool(res.fun <= 1e-9), float(res.fun)


def _settings_grid(settings: Sequence[int]):
    return itertools.product(*(range(s) for s in settings))


def _marginal_dist(t: ProbabilityTable, keep: Sequence[int], s: tuple) -> dict[tuple, float]:
    """p(o_keep | s) by summing explicit table entries."""
    out: dict[tuple, float] = {}
    for o in _settings_grid(t.scenario.outcomes):
        key = tuple(o[i] for i in keep)
        out[key] = out.get(key, 0.0) + float(t.p[tuple(s) + tuple(o)])
    return out


def _depends_on(t: ProbabilityTable, outcome_parties: Sequence[int], setting_parties: Sequence[int],
                tol: float) -> bool:
    """Does p(o_outcome_parties | s) change when only settings of ``setting_parties`` change?"""
    settings = t.scenario.settings
    for s in _settings_grid(settings):
        base = _marginal_dist(t, outcome_parties, s)
        for j in setting_parties:
            for alt in range(settings[j]):
                if alt == s[j]:
                    continue
                s2 = list(s)
                s2[j] = alt
                other = _marginal_dist(t, outcome_parties, tuple(s2))
                if any(abs(base[k] - other[k]) > tol for k in base):
                    return True
    return False


def _restrict(t: ProbabilityTable, keep: Sequence[int]) -> ProbabilityTable:
    """Reduced table on ``keep``, reading the others' settings as 0."""
    sc = t.scenario
    sub = Scenario(tuple(sc.parties[i] for i in keep), tuple(sc.settings[i] for i in keep),
                   tuple(sc.outcomes[i] for i in keep))
    p = np.zeros(sub.shape)
    for s in _settings_grid(sub.settings):
        full_s = [0] * sc.n
        for i, v in zip(keep, s):
            full_s[i] = v
        for o_key, val in _marginal_dist(t, keep, tuple(full_s)).items():
            p[tuple(s) + o_key] = val
    return ProbabilityTable(sub, p)


def brute_force_fixed_order(t: ProbabilityTable, config: CausalConfiguration, tol: float = 1e-9) -> bool:
    """Compatibility with a fixed causal configuration by exhaustive checking.

    For every subset K whose outcomes ignore the settings outside K, and
    every split of K into (X, Y), signaling from X to Y must be backed by
    some x in X preceding some y in Y.
    """
    names = t.scenario.parties
    n = len(names)
    for r in range(1, n + 1):
        for keep in itertools.combinations(range(n), r):
            rest = [i for i in range(n) if i not in keep]
            if rest and _depends_on(t, keep, rest, tol):
                continue
            sub = _restrict(t, keep) if rest else t
            local = list(range(len(keep)))
            for q in range(1, len(keep)):
                for xs in itertools.combinations(local, q):
                    ys = [i for i in local if i not in xs]
                    if not _depends_on(sub, ys, xs, tol):
                        continue
                    if not any((names[keep[x]], names[keep[y]]) in config.precedes for x in xs for y in ys):
                        return False
    return True


def allowed_type_count_formula(n: int) -> int:
    return 4 ** n - 3 ** n + 1


def brute_force_allowed_flags(n: int) -> list[tuple[tuple[int, int], ...]]:
    """Enumerate (input, output) flag pairs per party and keep those the validity rule allows.

    The rule: identity, or some party carries a nontrivial input with a trivial output.
    """
    out = []
    for flags in itertools.product(itertools.product((0, 1), repeat=2), repeat=n):
        identity = all(f == (0, 0) for f in flags)
        if identity or any(f == (1, 0) for f in flags):
            out.append(flags)
    return out


def iter_configurations(parties: Iterable[str]):
    """All strict partial orders over ``parties`` (brute force over relation subsets)."""
    parties = list(parties)
    pairs = [(a, b) for a in parties for b in parties if a != b]
    for mask in itertools.product((0, 1), repeat=len(pairs)):
        rel = frozenset(p for p, m in zip(pairs, mask) if m)
        try:
            yield CausalConfiguration(tuple(parties), rel)
        except ValueError:
            continue
