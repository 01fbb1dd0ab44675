"""Causal separability and extensible causal separability as convex feasibility.

A :class:`SeparabilitySpec` asks for positive semidefinite blocks Y_b, each
living on the slots left after removing its identity slots, such that

* the embedded blocks Y_b ⊗ I sum to the target W,
* every block lies in a coordinate span of allowed term types (optional),
* the blocks of one component sum to an operator with only the component's
  allowed term types (optional).

All constraints except positivity are linear and diagonal in the
Hilbert-Schmidt coefficients, and they decouple by slot pattern (which slots
carry a nontrivial basis element). The affine projection therefore reduces to
a few small weighted least-squares problems that are precomputed once.
Dykstra's algorithm alternates it with blockwise PSD projections.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import sparse

from .config import DEFAULT_TOLERANCES, SolverBudgets, Tolerances
from .procmat import (ProcessMatrix, TermType, allowed_term_types,
                      no_signaling_matrix, no_signaling_types, term_types_present)
from .qlinalg import TensorSpace, embed, hs_expand, _hs_basis_array
from .reports import (CERTIFIED_INFEASIBLE, FEASIBLE, INCONCLUSIVE, FeasibilityReport)

log = logging.getLogger(__name__)


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class BlockSpec:
    name: str
    component: str
    identity_slots: frozenset[str]
    span: frozenset[TermType] | None = None


@dataclass(frozen=True)
class SeparabilitySpec:
    space: TensorSpace
    parties: tuple[str, ...]
    blocks: tuple[BlockSpec, ...]
    components: dict = field(default_factory=dict)  # component -> frozenset[TermType] | None

    def block_space(self, b: BlockSpec) -> TensorSpace:
        return TensorSpace(tuple(s for s in self.space.slots if s[0] not in b.identity_slots))


def _pattern(t: TermType) -> tuple[bool, ...]:
    return tuple(f for pair in t.flags for f in pair)


# ---------------------------------------------------------------------------
# fast Hilbert-Schmidt transforms for a fixed space


class _HSTransform:
    """Coefficient <-> matrix maps for one tensor space, applied slot by slot."""

    def __init__(self, space: TensorSpace):
        self.dims = space.dims
        self.D = space.total_dim
        n = len(self.dims)
        # to_mat[k][mu, (r, c)] = sigma_mu[r, c]; to_coef[k][(r, c), mu] = sigma_mu[c, r]
        self.to_mat = [_hs_basis_array(d).reshape(d * d, d * d) for d in self.dims]
        self.to_coef = [_hs_basis_array(d).transpose(0, 2, 1).reshape(d * d, d * d).T.copy()
                        for d in self.dims]
        # (r1, c1, r2, c2, ...) <-> (r1, r2, ..., c1, c2, ...)
        self.interleaved = tuple(x for d in self.dims for x in (d, d))
        self.to_rc = [2 * k for k in range(n)] + [2 * k + 1 for k in range(n)]
        self.from_rc = [x for k in range(n) for x in (k, n + k)]

    @staticmethod
    def _sweep(t: np.ndarray, mats) -> np.ndarray:
        """Apply one matrix per slot; ``t`` is (batch, slot1, slot2, ...) flattened after the batch axis."""
        b = t.shape[0]
        for m in mats:
            t = t.reshape(b, m.shape[0], -1).transpose(0, 2, 1) @ m
        return t.reshape(b, -1)

    def matrix(self, c: np.ndarray) -> np.ndarray:
        """Matrix (or stack of matrices) from coefficient vector(s)."""
        c = np.asarray(c, dtype=complex)
        single = c.ndim == 1
        c = c.reshape(-1, c.shape[-1])
        if not self.dims:
            out = c.reshape(-1, 1, 1)
        else:
            t = self._sweep(c, self.to_mat)
            out = t.reshape((-1,) + self.interleaved).transpose([0] + [k + 1 for k in self.to_rc])
            out = out.reshape(-1, self.D, self.D)
        return out[0] if single else out

    def coefficients(self, m: np.ndarray) -> np.ndarray:
        m = np.asarray(m)
        single = m.ndim == 2
        m = m.reshape(-1, self.D, self.D)
        if not self.dims:
            out = m.real.reshape(-1, 1)
        else:
            t = m.reshape((-1,) + self.dims + self.dims).transpose([0] + [k + 1 for k in self.from_rc])
            out = self._sweep(t.reshape(m.shape[0], -1), self.to_coef).real / self.D
        return out[0] if single else out


# ---------------------------------------------------------------------------
# the Dykstra engine


class _Problem:
    def __init__(self, spec: SeparabilitySpec, w: np.ndarray, tol: Tolerances):
        self.spec = spec
        space = spec.space
        self.nslots = len(space)
        full_shape = tuple(d * d for d in space.dims)
        target = hs_expand(w, space, tol.hermiticity).reshape(-1)
        grid = np.indices(full_shape).reshape(self.nslots, -1)
        nontriv = grid > 0
        pid = (nontriv * (1 << np.arange(self.nslots))[:, None]).sum(axis=0)

        self.blocks = list(spec.blocks)
        self.spaces = [spec.block_space(b) for b in self.blocks]
        self.transforms = [_HSTransform(s) for s in self.spaces]
        self.weights = np.array([s.total_dim for s in self.spaces], dtype=float)
        self.sizes = [int(np.prod([d * d for d in s.dims])) for s in self.spaces]
        kept = [[space.index(lab) for lab in s.labels] for s in self.spaces]
        id_idx = [[space.index(lab) for lab in b.identity_slots] for b in self.blocks]
        spans = [None if b.span is None else {_pattern(t) for t in b.span} for b in self.blocks]
        comps = list(spec.components)
        allowed = {c: (None if spec.components[c] is None else {_pattern(t) for t in spec.components[c]})
                   for c in comps}

        self.groups = []
        self.unsupported = []
        covered = [np.zeros(n, dtype=bool) for n in self.sizes]
        for p in np.unique(pid):
            pattern = tuple(bool(p >> k & 1) for k in range(self.nslots))
            alpha = np.flatnonzero(pid == p)
            free = [b for b in range(len(self.blocks))
                    if not any(pattern[k] for k in id_idx[b])
                    and (spans[b] is None or pattern in spans[b])]
            rows = []
            for c in comps:
                members = [i for i, b in enumerate(free) if self.blocks[b].component == c]
                if members and allowed[c] is not None and pattern not in allowed[c]:
                    r = np.zeros(len(free))
                    r[members] = 1
                    rows.append(r)
            rows.append(np.ones(len(free)))
            C = np.array(rows).reshape(len(rows), len(free))
            r_target = target[alpha]
            if not free:
                if np.max(np.abs(r_target)) > tol.sep_witness_sum:
                    self.unsupported.append(pattern)
                continue
            Dinv = 1.0 / self.weights[free]
            G = (C * Dinv) @ C.T
            M = (Dinv[:, None] * C.T) @ np.linalg.pinv(G, rcond=1e-12)
            # consistency: the target must lie in the range of the constraint rows
            R = np.zeros((len(rows), len(alpha)))
            R[-1] = r_target
            resid = C @ (M @ R) - R
            if np.max(np.abs(resid), initial=0.0) > tol.sep_witness_sum:
                self.unsupported.append(pattern)
            idx = []
            for b in free:
                sub = grid[kept[b]][:, alpha]
                flat = np.ravel_multi_index(tuple(sub), tuple(full_shape[k] for k in kept[b])) \
                    if kept[b] else np.zeros(len(alpha), dtype=int)
                idx.append(flat)
                covered[b][flat] = True
            self.groups.append((free, idx, C, M, R))
        self.zero_masks = [~c for c in covered]
        self._build_affine_operator()
        # blocks with identical slot dimensions share one transform and one batched eigh
        self.batched = len({s.dims for s in self.spaces}) == 1 and len(self.spaces) > 1

    def _build_affine_operator(self):
        """Assemble the affine projection as z -> P z + r on the stacked coefficient vector."""
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)]).astype(int)
        rows, cols, vals = [], [], []
        r = np.zeros(self.offsets[-1])
        for free, idx, C, M, R in self.groups:
            K = np.eye(len(free)) - M @ C
            MR = M @ R
            for j, bj in enumerate(free):
                tgt = self.offsets[bj] + idx[j]
                r[tgt] = MR[j]
                for l, bl in enumerate(free):
                    if K[j, l] != 0:
                        rows.append(tgt)
                        cols.append(self.offsets[bl] + idx[l])
                        vals.append(np.full(len(tgt), K[j, l]))
        n = self.offsets[-1]
        if rows:
            self.P = sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                                       shape=(n, n))
        else:
            self.P = sparse.csr_matrix((n, n))
        self.r = r

    def split(self, z: np.ndarray) -> list[np.ndarray]:
        return [z[a:b] for a, b in zip(self.offsets[:-1], self.offsets[1:])]

    def project_affine(self, ys: list[np.ndarray]) -> list[np.ndarray]:
        return self.split(self.P @ np.concatenate(ys) + self.r)

    def project_psd(self, ys: list[np.ndarray], floor: float = 0.0) -> list[np.ndarray]:
        """Project each block onto {X : X >= floor * I}."""
        if self.batched:
            tr = self.transforms[0]
            vals, vecs = np.linalg.eigh(tr.matrix(np.stack(ys)))
            pos = (vecs * np.clip(vals, floor, None)[:, None, :]) @ vecs.conj().transpose(0, 2, 1)
            return list(tr.coefficients(pos))
        out = []
        for y, tr in zip(ys, self.transforms):
            vals, vecs = np.linalg.eigh(tr.matrix(y))
            out.append(tr.coefficients((vecs * np.clip(vals, floor, None)) @ vecs.conj().T))
        return out

    def psd_distance(self, ys: list[np.ndarray]) -> float:
        """Frobenius distance of the blocks to the PSD cone."""
        neg = 0.0
        for y, tr in zip(ys, self.transforms):
            vals = np.linalg.eigvalsh(tr.matrix(y))
            neg += float(np.sum(np.clip(vals, None, 0.0) ** 2))
        return float(np.sqrt(neg))

    def min_eigs(self, ys):
        return [float(np.linalg.eigvalsh(tr.matrix(y))[0]) for y, tr in zip(ys, self.transforms)]


_FLOOR = 1e-5  # relative to Tr W / dim W


def solve_spec(w: ProcessMatrix | np.ndarray, spec: SeparabilitySpec,
               budgets: SolverBudgets = SolverBudgets(),
               tol: Tolerances = DEFAULT_TOLERANCES, log_every: int = 50) -> FeasibilityReport:
    """Dykstra feasibility search for ``spec`` with target ``w``."""
    m = w.matrix if isinstance(w, ProcessMatrix) else np.asarray(w, dtype=complex)
    prob = _Problem(spec, m, tol)
    if prob.unsupported:
        labels = ["".join(lab for lab, f in zip(spec.space.labels, pat) if f) or "1"
                  for pat in prob.unsupported]
        return FeasibilityReport(CERTIFIED_INFEASIBLE, residual=float("inf"), certificate={
            "kind": "unsupported-term-types",
            "reason": "target has terms that no admissible block combination can carry",
            "slot_patterns": labels})
    ys = prob.project_affine([np.zeros(n) for n in prob.sizes])
    q = [np.zeros(n) for n in prob.sizes]
    # Start on a slightly shrunk cone so a strictly positive witness appears sooner;
    # drop to the true cone if that stalls (boundary-feasible targets).
    floor = _FLOOR * float(np.trace(m).real) / m.shape[0]
    history = []
    best = np.inf
    best_at = 0
    status = INCONCLUSIVE
    residual = np.inf
    for it in range(1, budgets.dykstra_iterations + 1):
        shifted = [y + qq for y, qq in zip(ys, q)]
        xs = prob.project_psd(shifted, floor)
        q = [s - x for s, x in zip(shifted, xs)]
        ys = prob.project_affine(xs)
        # distance between the cone iterate and its affine projection (Frobenius)
        gap = float(np.sqrt(sum(wt * np.dot(x - y, x - y) for wt, x, y in zip(prob.weights, xs, ys))))
        if it % log_every == 0 or it == 1:
            history.append(gap)
        if gap <= tol.sep_residual:
            residual = prob.psd_distance(ys)
            if residual <= tol.sep_residual and min(prob.min_eigs(ys)) >= tol.sep_witness_psd:
                status = FEASIBLE
                break
        if gap < best * (1 - 1e-3):
            best, best_at = gap, it
        elif it - best_at > budgets.dykstra_stall_window // (2 if floor else 1):
            if floor:
                log.info("shrunk-cone phase stalled at gap %.3g; switching to the PSD cone", gap)
                floor, best, best_at = 0.0, np.inf, it
                q = [np.zeros(n) for n in prob.sizes]
                continue
            log.info("Dykstra stalled at gap %.3g after %d iterations", gap, it)
            break
    if status != FEASIBLE:
        residual = prob.psd_distance(ys)
    history.append(residual)
    blocks = {b.name: tr.matrix(y) for b, y, tr in zip(prob.blocks, ys, prob.transforms)}
    report = FeasibilityReport(status, residual=residual, iterations=it, history=history,
                               blocks=blocks if status == FEASIBLE else {},
                               detail={"block_slots": {b.name: list(s.labels)
                                                       for b, s in zip(prob.blocks, prob.spaces)}})
    if status == FEASIBLE:
        problems = check_witness(m, spec, blocks, tol)
        if problems:
            report.status = INCONCLUSIVE
            report.detail["witness_problems"] = problems
    return report


def check_witness(w: np.ndarray, spec: SeparabilitySpec, blocks: dict[str, np.ndarray],
                  tol: Tolerances = DEFAULT_TOLERANCES) -> list[str]:
    """Re-validate a witness with plain matrix operations; returns the problems found."""
    problems = []
    total = np.zeros_like(np.asarray(w, dtype=complex))
    comp_sums: dict[str, np.ndarray] = {}
    for b in spec.blocks:
        y = blocks[b.name]
        lam = float(np.linalg.eigvalsh((y + y.conj().T) / 2)[0])
        if lam < tol.sep_witness_psd:
            problems.append(f"block {b.name} not PSD (min eigenvalue {lam:.3g})")
        full = embed(y, spec.block_space(b), spec.space)
        total = total + full
        comp_sums[b.component] = comp_sums.get(b.component, 0) + full
        if b.span is not None:
            bad = _outside(full, spec, {_pattern(t) for t in b.span})
            if bad > tol.sep_witness_span:
                problems.append(f"block {b.name} leaves its span by {bad:.3g}")
    for c, allowed in spec.components.items():
        if allowed is not None and c in comp_sums:
            bad = _outside(comp_sums[c], spec, {_pattern(t) for t in allowed})
            if bad > tol.sep_witness_span:
                problems.append(f"component {c} has forbidden terms of size {bad:.3g}")
    dev = float(np.max(np.abs(total - w)))
    if dev > tol.sep_witness_sum:
        problems.append(f"blocks miss the target by {dev:.3g}")
    return problems


def _outside(m: np.ndarray, spec: SeparabilitySpec, patterns: set) -> float:
    c = np.abs(hs_expand(m, spec.space, 1e-6))
    worst = 0.0
    for idx in zip(*np.nonzero(c > 0)):
        pat = tuple(bool(i) for i in idx)
        if pat not in patterns:
            worst = max(worst, float(c[idx]))
    return worst


# ---------------------------------------------------------------------------
# the concrete tests


def _restricted(types, names_with_trivial: Sequence[str], parties) -> frozenset[TermType]:
    """Keep types whose flags are false on the listed slots."""
    out = []
    for t in types:
        slots = set(t.slots)
        if not slots & set(names_with_trivial):
            out.append(t)
    return frozenset(out)


def bipartite_spec(w: ProcessMatrix) -> SeparabilitySpec:
    if len(w.parties) != 2:
        raise ValueError("bipartite causal separability needs exactly 2 parties")
    (a, b) = w.parties
    allowed = allowed_term_types(w.parties)
    blocks = (
        # Bob does not signal to Alice: identity on Bob's output
        BlockSpec(f"{a.name}<{b.name}", f"{a.name}<{b.name}", frozenset({b.out_label}),
                  _restricted(allowed, [b.out_label], w.parties)),
        BlockSpec(f"{b.name}<{a.name}", f"{b.name}<{a.name}", frozenset({a.out_label}),
                  _restricted(allowed, [a.out_label], w.parties)),
    )
    return SeparabilitySpec(w.space, w.names, blocks, {blk.component: None for blk in blocks})


def first_party_types(w: ProcessMatrix, first: str) -> frozenset[TermType]:
    """Allowed types with no signaling from the other parties to ``first``."""
    others = [n for n in w.names if n != first]
    return frozenset(allowed_term_types(w.parties) & no_signaling_types(w.parties, others))


def _first_blocks(w: ProcessMatrix, first: str, span=None) -> list[BlockSpec]:
    others = [p for p in w.parties if p.name != first]
    x, y = others
    return [
        BlockSpec(f"{first}:{x.name}<{y.name}", first, frozenset({y.out_label}), span),
        BlockSpec(f"{first}:{y.name}<{x.name}", first, frozenset({x.out_label}), span),
    ]


def fixed_first_spec(w: ProcessMatrix, first: str) -> SeparabilitySpec:
    if len(w.parties) != 3:
        raise ValueError("needs exactly 3 parties")
    w.party(first)
    blocks = tuple(_first_blocks(w, first))
    return SeparabilitySpec(w.space, w.names, blocks, {first: first_party_types(w, first)})


def tripartite_spec(w: ProcessMatrix) -> SeparabilitySpec:
    if len(w.parties) != 3:
        raise ValueError("needs exactly 3 parties")
    blocks, comps = [], {}
    for first in w.names:
        blocks += _first_blocks(w, first)
        comps[first] = first_party_types(w, first)
    return SeparabilitySpec(w.space, w.names, tuple(blocks), comps)


def bipartite_causal_sep(w: ProcessMatrix, budgets: SolverBudgets = SolverBudgets(),
                         tol: Tolerances = DEFAULT_TOLERANCES) -> FeasibilityReport:
    """Search W = X + Y with X ⪰ 0 not signaling from B to A and Y ⪰ 0 not signaling from A to B."""
    report = solve_spec(w, bipartite_spec(w), budgets, tol)
    report.detail["label"] = "causally separable (equivalently extensibly causally separable for two parties)" \
        if report.feasible else "no decomposition found"
    return report


def fixed_first_ecs(w: ProcessMatrix, first: str, budgets: SolverBudgets = SolverBudgets(),
                    tol: Tolerances = DEFAULT_TOLERANCES) -> FeasibilityReport:
    """ECS test for a tripartite matrix in which ``first`` acts first.

    Blocks are I^{x2} ⊗ W1 and I^{y2} ⊗ W2 for the other parties x, y, with
    no span restriction on the individual blocks.
    """
    spec = fixed_first_spec(w, first)
    allowed = spec.components[first]
    bad = sorted(t.label for t in term_types_present(w, tol.coefficient_zero) if t not in allowed)
    if bad:
        raise PreconditionError(f"matrix has types not allowed with {first} first: {bad}")
    return solve_spec(w, spec, budgets, tol)


def tripartite_ecs(w: ProcessMatrix, budgets: SolverBudgets = SolverBudgets(),
                   tol: Tolerances = DEFAULT_TOLERANCES) -> FeasibilityReport:
    """Three-way mixture of fixed-first-party components, six blocks in total.

    The rank-one certificate is analytic, so it is tried before the
    projection solver.
    """
    cert = rank1_nonseparability_certificate(w, tol)
    if cert is not None:
        return FeasibilityReport(CERTIFIED_INFEASIBLE, certificate=cert,
                                 detail={"kind": cert["kind"]})
    return solve_spec(w, tripartite_spec(w), budgets, tol)


def rank1_nonseparability_certificate(w: ProcessMatrix, tol: Tolerances = DEFAULT_TOLERANCES) -> dict | None:
    """Certificate that a tripartite matrix is neither causally separable nor ECS.

    A rank-one matrix admits no nontrivial convex decomposition, so it would
    have to be a single fixed-first-party component; signaling to every
    party rules that out.
    """
    if len(w.parties) != 3:
        raise ValueError("needs exactly 3 parties")
    vals = np.linalg.eigvalsh((w.matrix + w.matrix.conj().T) / 2)
    if vals[-2] > tol.rank_one:
        return None
    signaling = {}
    for x in w.names:
        rep = no_signaling_matrix(w, [n for n in w.names if n != x], [x], tol.coefficient_zero)
        if rep.no_signaling:
            return None
        signaling[x] = sorted(rep.offending)
    return {"kind": "rank-one-with-signaling-to-every-party", "largest_eigenvalue": float(vals[-1]),
            "second_eigenvalue": float(vals[-2]), "signaling_types": signaling}
