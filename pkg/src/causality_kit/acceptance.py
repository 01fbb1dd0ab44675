"""Named acceptance checks, one per criterion, shared by the test suite and ``causality-kit suite``.

Each check returns a :class:`CheckResult` with sub-checks, so a report shows
exactly which part of a criterion failed. Time limits are part of the
criteria and count toward the verdict.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import gallery
from .choi import PartySpec
from .config import DEFAULT_TOLERANCES, SolverBudgets, Tolerances
from .convexsep import bipartite_causal_sep, check_witness as sep_check_witness, bipartite_spec, \
    tripartite_ecs, tripartite_spec
from .correlations import (Scenario, compose, conditional_process, fixed_order_causal_check,
                           mix_tables, ProbabilityTable, no_signaling_subset)
from .generators import (bipartite_separable, dynamical_order_table, ordered_table, random_causal_table,
                         random_table, tripartite_ecs_process)
from .oracles import (allowed_type_count_formula, brute_force_allowed_flags, brute_force_fixed_order,
                      hull_membership, iter_configurations, one_way_vertices)
from .polytope import causal_bound, causal_membership, check_witness as lp_check_witness, ocb_game, \
    optimize_quantum_value
from .procmat import (ProcessMatrix, TermType, allowed_term_types, forbidden_term_types, validate)
from .qlinalg import hs_basis, kron
from .reports import fraction_str

# Reference type lists, written out by hand.
MONOPARTITE_ALLOWED = ["1", "A1"]
BIPARTITE_LISTED = ["1", "A1", "B1", "A2B1", "A1B2", "A1A2B1", "A1B1B2"]
TRIPARTITE_ALLOWED = [
    "C1", "B2C1", "B1", "B1C2", "B1C1", "B1C1C2", "B1B2C1", "A2C1", "A2B2C1", "A2B1",
    "A2B1C2", "A2B1C1", "A2B1C1C2", "A2B1B2C1", "A1", "A1C2", "A1C1", "A1C1C2", "A1B2", "A1B2C2",
    "A1B2C1", "A1B2C1C2", "A1B1", "A1B1C2", "A1B1C1", "A1B1C1C2", "A1B1B2", "A1B1B2C2", "A1B1B2C1",
    "A1B1B2C1C2", "A1A2C1", "A1A2B2C1", "A1A2B1", "A1A2B1C2", "A1A2B1C1", "A1A2B1C1C2",
    "A1A2B1B2C1", "1",
]
TRIPARTITE_FORBIDDEN = [
    "C2", "C1C2", "B2", "B2C2", "B2C1C2", "B1B2", "B1B2C2", "B1B2C1C2", "A2", "A2C2", "A2C1C2",
    "A2B2", "A2B2C2", "A2B2C1C2", "A2B1B2", "A2B1B2C2", "A2B1B2C1C2", "A1A2", "A1A2C2",
    "A1A2C1C2", "A1A2B2", "A1A2B2C2", "A1A2B2C1C2", "A1A2B1B2", "A1A2B1B2C2", "A1A2B1B2C1C2",
]
C_FIRST = [
    "C1", "B1", "B1C2", "B1C1", "B1C1C2", "A2B1", "A2B1C2", "A2B1C1C2", "A1", "A1C2", "A1C1",
    "A1C1C2", "A1B2", "A1B2C2", "A1B2C1C2", "A1B1", "A1B1C2", "A1B1C1", "A1B1C1C2", "A1B1B2",
    "A1B1B2C2", "A1B1B2C1C2", "A1A2B1", "A1A2B1C2", "A1A2B1C1C2", "A1B2C1", "A2B1C1",
    "A1A2B1C1", "A1B1B2C1", "1",
]


@dataclass
class SubCheck:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, **self.detail}


@dataclass
class CheckResult:
    criterion: int
    title: str
    limit_seconds: float
    subchecks: list[SubCheck] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def within_time(self) -> bool:
        return self.seconds <= self.limit_seconds

    @property
    def passed(self) -> bool:
        return self.within_time and all(s.passed for s in self.subchecks)

    def failed(self) -> list[str]:
        out = [s.name for s in self.subchecks if not s.passed]
        if not self.within_time:
            out.append(f"time {self.seconds:.1f}s > {self.limit_seconds:.0f}s")
        return out

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = "" if self.passed else "  failed: " + "; ".join(self.failed())
        return f"[{status}] criterion {self.criterion}: {self.title} ({self.seconds:.2f}s){extra}"

    def to_dict(self) -> dict:
        return {"criterion": self.criterion, "title": self.title, "passed": self.passed,
                "seconds": round(self.seconds, 3), "limit_seconds": self.limit_seconds,
                "subchecks": [s.to_dict() for s in self.subchecks]}


def _labels(types) -> set[str]:
    return {t.label for t in types}


def _qubits(names: str) -> tuple[PartySpec, ...]:
    return tuple(PartySpec(n, 2, 2) for n in names)


# ---------------------------------------------------------------------------


def check_term_types(cfg: "Settings") -> list[SubCheck]:
    out = []
    mono = _labels(allowed_term_types(_qubits("A")))
    out.append(SubCheck("n=1 allowed types", mono == set(MONOPARTITE_ALLOWED), {"types": sorted(mono)}))
    bi = _labels(allowed_term_types(_qubits("AB")))
    out.append(SubCheck("n=2 allowed types equal the 7 listed", bi == set(BIPARTITE_LISTED),
                        {"count": len(bi), "extra": sorted(bi - set(BIPARTITE_LISTED)),
                         "missing": sorted(set(BIPARTITE_LISTED) - bi)}))
    tri = _labels(allowed_term_types(_qubits("ABC")))
    out.append(SubCheck("n=3 allowed types equal the 38-entry table", tri == set(TRIPARTITE_ALLOWED)
                        and len(TRIPARTITE_ALLOWED) == 38, {"count": len(tri)}))
    forb = _labels(forbidden_term_types(_qubits("ABC")))
    out.append(SubCheck("n=3 forbidden types equal the 26-entry table",
                        forb == set(TRIPARTITE_FORBIDDEN) and len(TRIPARTITE_FORBIDDEN) == 26,
                        {"count": len(forb)}))
    counts = {}
    ok = True
    for n in range(1, 6):
        lib = len(allowed_term_types(_qubits("ABCDE"[:n])))
        brute = len(brute_force_allowed_flags(n))
        counts[n] = [lib, brute, allowed_type_count_formula(n)]
        ok &= lib == brute == allowed_type_count_formula(n)
    out.append(SubCheck("4^n - 3^n + 1 for n <= 5", ok, {"counts": counts}))
    return out


def _forbidden_operator(parties, t: TermType, rng) -> np.ndarray:
    mats = []
    for p, (fi, fo) in zip(parties, t.flags):
        for d, flag in ((p.d_in, fi), (p.d_out, fo)):
            basis = hs_basis(d)
            mats.append(basis[rng.integers(1, len(basis))] if flag else basis[0])
    return kron(*mats)


def check_validity(cfg: "Settings") -> list[SubCheck]:
    tol = cfg.tol
    out = []
    for name, w in (("ocb", gallery.ocb_process()), ("ocb-tripartite", gallery.ocb_tripartite()),
                    ("ocb-tripartite-extended", gallery.ocb_tripartite_extended()),
                    ("switch", gallery.switch_process())):
        rep = validate(w, tol)
        out.append(SubCheck(f"{name} validates", rep.ok and rep.min_eigenvalue >= -1e-10
                            and abs(rep.trace - rep.expected_trace) <= 1e-9,
                            {"min_eigenvalue": rep.min_eigenvalue, "trace": rep.trace}))
    rng = np.random.default_rng(cfg.seed)
    bases = [gallery.ocb_process(), gallery.ocb_tripartite(), gallery.switch_process()]
    hits = []
    for k in range(10):
        base = bases[k % 3] if k < 6 else bipartite_separable(*_qubits("AB"), rng)
        forb = sorted(forbidden_term_types(base.parties))
        t = forb[rng.integers(len(forb))]
        w = ProcessMatrix(base.parties, base.matrix + 1e-3 * _forbidden_operator(base.parties, t, rng))
        rep = validate(w, tol)
        hits.append({"injected": t.label, "reported": sorted(rep.forbidden_types), "ok": not rep.ok})
    ok = all(h["ok"] and h["reported"] == [h["injected"]] for h in hits)
    out.append(SubCheck("10 perturbed matrices flagged with the injected type", ok, {"cases": hits}))
    return out


def check_switch(cfg: "Settings") -> list[SubCheck]:
    rep = gallery.switch_nonseparability_pipeline(tol=cfg.tol, budgets=cfg.budgets)
    red = rep.stage("reduced_matrix").detail
    sep = rep.stage("reduced_causally_separable").detail
    return [
        SubCheck("reduced matrix within 1e-12", red["max_deviation"] <= 1e-12, red),
        SubCheck("rank-one certificate", rep.stage("rank1_certificate").ok),
        SubCheck("signaling to A, B and C", rep.stage("signaling_to_each_party").ok,
                 rep.stage("signaling_to_each_party").detail),
        SubCheck("reduced matrix causally separable, residual <= 1e-7",
                 sep["status"] == "feasible" and sep["residual"] <= 1e-7, sep),
        SubCheck("verdict", rep.verdict == "causal, not causally separable", {"verdict": rep.verdict}),
    ]


def check_causal_bound(cfg: "Settings") -> list[SubCheck]:
    res = causal_bound(ocb_game(), exact=True)
    text = fraction_str(res.value)
    return [SubCheck("exact bound is 3/4", res.exact and text == "3/4", {"bound": text})]


def check_quantum_violation(cfg: "Settings") -> list[SubCheck]:
    budgets = dataclasses.replace(cfg.budgets, seesaw_sweeps=min(cfg.budgets.seesaw_sweeps, 200))
    q = optimize_quantum_value(gallery.ocb_process(), ocb_game(), budgets, seed=cfg.seed)
    fl = causal_membership(q.table)
    ex = causal_membership(q.table, exact=True)
    return [
        SubCheck("seesaw value >= 0.85 within 200 sweeps", q.value >= 0.85 and q.sweeps <= 200,
                 {"value": q.value, "sweeps": q.sweeps}),
        SubCheck("float membership rejects with margin >= 1e-4",
                 fl.status == "infeasible" and (fl.margin or 0) >= 1e-4, {"margin": fl.margin}),
        SubCheck("exact membership rejects", ex.status == "infeasible", {"status": ex.status}),
    ]


def check_activation(cfg: "Settings") -> list[SubCheck]:
    tol = dataclasses.replace(cfg.tol, sep_residual=min(cfg.tol.sep_residual, 1e-6))
    pre = gallery.ocb_tripartite_pipeline(20, cfg.seed, tol, cfg.budgets, sep_residual=1e-6)
    act = gallery.activation_pipeline(cfg.seed, cfg.tol, cfg.budgets, exact_check=False)
    cond = act.stage("conditional_matrix").detail
    table = act.stage("adaptive_strategy_table").detail
    post = act.stage("post_extension_noncausal").detail
    events = pre.stage("conditional_processes_separable").detail["events"]
    return [
        SubCheck("conditional equals the teleported OCB matrix within 1e-12 (after normalization)",
                 cond["max_deviation"] <= 1e-12, cond),
        SubCheck("adaptive table matches direct table within 1e-9", table["max_deviation"] <= 1e-9, table),
        SubCheck("20 Charlie events give diagonal, separable conditionals (residual <= 1e-6)", pre.ok,
                 {"worst_residual": max(e["residual"] for e in events),
                  "all_diagonal": all(e["diagonal"] for e in events)}),
        SubCheck("post-extension table rejected", post["status"] == "infeasible", post),
    ]


def check_polytope(cfg: "Settings") -> list[SubCheck]:
    rng = np.random.default_rng(cfg.seed)
    sc = Scenario(("A", "B"), (2, 2), (2, 2))
    verts = one_way_vertices(sc)
    two_way = np.zeros(sc.shape)
    for x, y in np.ndindex(2, 2):
        two_way[x, y, y, x] = 1.0
    two_way = ProbabilityTable(sc, two_way)
    disagreements, inside = [], 0
    for i in range(200):
        kind = i % 4
        if kind == 0:
            t = random_causal_table(sc, rng)
        elif kind == 1:
            t = random_table(sc, rng)
        elif kind == 2:
            t = random_causal_table(sc, rng, deterministic=True)
        else:
            lam = rng.uniform(0.0, 1.0)
            t = mix_tables([(lam, two_way), (1 - lam, random_causal_table(sc, rng))])
        oracle, _ = hull_membership(t, verts)
        ours = causal_membership(t).feasible
        inside += oracle
        if oracle != ours:
            disagreements.append(i)
    out = [SubCheck("2222 membership agrees with the vertex-hull oracle on 200 tables",
                    not disagreements and len(verts) == 112,
                    {"disagreements": disagreements, "inside": inside, "vertices": len(verts)})]
    bad = []
    for i in range(50):
        t = dynamical_order_table(rng, deterministic=bool(i % 2))
        rep = causal_membership(t)
        problems = lp_check_witness(t, rep.blocks) if rep.feasible else ["rejected"]
        if problems:
            bad.append((i, problems))
    out.append(SubCheck("50 dynamical-order tables accepted with valid witnesses", not bad, {"failures": bad}))
    return out


def check_separability(cfg: "Settings") -> list[SubCheck]:
    tol = dataclasses.replace(cfg.tol, sep_residual=min(cfg.tol.sep_residual, 1e-6))
    rng = np.random.default_rng(cfg.seed)
    out = []
    for name, make, test, spec in (
            ("bipartite", lambda: bipartite_separable(*_qubits("AB"), rng), bipartite_causal_sep, bipartite_spec),
            ("tripartite", lambda: tripartite_ecs_process(_qubits("ABC"), rng), tripartite_ecs, tripartite_spec)):
        fails, worst = [], 0.0
        for i in range(50):
            w = make()
            rep = test(w, cfg.budgets, tol)
            problems = sep_check_witness(w.matrix, spec(w), rep.blocks, cfg.tol) if rep.feasible else [rep.status]
            worst = max(worst, rep.residual)
            if problems or rep.residual > 1e-6:
                fails.append((i, problems))
        out.append(SubCheck(f"50 {name} generator matrices accepted, witnesses re-validated",
                            not fails, {"failures": fails, "worst_residual": worst}))
    return out


def check_recomposition(cfg: "Settings") -> list[SubCheck]:
    rng = np.random.default_rng(cfg.seed)
    sc = Scenario(("A", "B", "C"), (2, 2, 2), (2, 2, 2))
    configs = list(iter_configurations(sc.parties))
    worst, tested, recomposed = 0.0, 0, 0
    disagreements = []
    for i in range(100):
        if i % 2:
            t = ordered_table(sc, list(rng.permutation(3)), rng)
        else:
            t = random_causal_table(sc, rng)
        for given in (["A"], ["B"], ["C"], ["A", "B"]):
            rest = [x for x in sc.parties if x not in given]
            if not no_signaling_subset(t, rest, given)[0]:
                continue
            cond, red = conditional_process(t, given)
            worst = max(worst, float(np.max(np.abs(compose(cond, red).p - t.p))))
            recomposed += 1
        for c in configs[i % 3::3]:
            tested += 1
            if fixed_order_causal_check(t, c).ok != brute_force_fixed_order(t, c):
                disagreements.append((i, sorted(c.precedes)))
    return [
        SubCheck("reduced/conditional recomposition within 1e-10", worst <= 1e-10 and recomposed > 0,
                 {"worst": worst, "recomposed": recomposed}),
        SubCheck("fixed-order check agrees with brute force", not disagreements,
                 {"pairs": tested, "disagreements": disagreements}),
    ]


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Settings:
    tol: Tolerances = DEFAULT_TOLERANCES
    budgets: SolverBudgets = SolverBudgets()
    seed: int = 20160523


CRITERIA: dict[int, tuple[str, float, Callable[[Settings], list[SubCheck]]]] = {
    1: ("term-type algebra", 1.0, check_term_types),
    2: ("validity", 5.0, check_validity),
    3: ("switch reproduction", 10.0, check_switch),
    4: ("causal bound", 10.0, check_causal_bound),
    5: ("quantum violation", 20.0, check_quantum_violation),
    6: ("activation", 30.0, check_activation),
    7: ("polytope soundness and completeness", 30.0, check_polytope),
    8: ("separability generators", 30.0, check_separability),
    9: ("classical recomposition", 10.0, check_recomposition),
}


def run_criterion(k: int, settings: Settings = Settings()) -> CheckResult:
    title, limit, fn = CRITERIA[k]
    t0 = time.perf_counter()
    subs = fn(settings)
    return CheckResult(k, title, limit, subs, time.perf_counter() - t0)


def run_all(settings: Settings = Settings(), only=None) -> list[CheckResult]:
    return [run_criterion(k, settings) for k in sorted(CRITERIA) if only is None or k in only]
