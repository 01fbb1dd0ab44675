"""Worked examples: the OCB matrix, its tripartite variant, the quantum switch,
and the end-to-end pipelines built on them.

Slot conventions: parties are listed in order A, B, C; Charlie's input in the
switch is one d = 4 slot ordered (control ⊗ system); ancilla extensions append
the ancilla to the input as the less significant factor, e.g. B1 ⊗ B1'.
"""

from __future__ import annotations

import logging
from fractions import Fraction
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .choi import CJOperator, Instrument, PartySpec, choi_from_kraus, maximally_entangled
from .config import DEFAULT_TOLERANCES, SolverBudgets, Tolerances
from .convexsep import bipartite_causal_sep, rank1_nonseparability_certificate
from .polytope import causal_membership, ocb_game, optimize_quantum_value
from .procmat import (ProcessMatrix, condition_on_event, extend_with_ancilla, no_signaling_matrix,
                      probabilities, probability_table, reduced_matrix, term_types_present, validate)
from .generators import random_density
from .qlinalg import kron

log = logging.getLogger(__name__)

PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

QUBIT = 2
SQRT2 = np.sqrt(2.0)


def pauli_string(labels: list[str], ops: Mapping[str, str]) -> np.ndarray:
    """Tensor product over qubit slots ``labels`` with Paulis named in ``ops`` (identity elsewhere)."""
    return kron(*[PAULI[ops.get(lab, "i")] for lab in labels])


def _party(name: str, d_in: int = QUBIT, d_out: int = QUBIT) -> PartySpec:
    return PartySpec(name, d_in, d_out)


# ---------------------------------------------------------------------------
# constructors


def ocb_process() -> ProcessMatrix:
    """(1/4)(I + (Z_A1 X_B1 Z_B2 + Z_A2 Z_B1) / sqrt 2) on two qubit parties."""
    slots = ["A1", "A2", "B1", "B2"]
    m = (pauli_string(slots, {})
         + pauli_string(slots, {"A1": "z", "B1": "x", "B2": "z"}) / SQRT2
         + pauli_string(slots, {"A2": "z", "B1": "z"}) / SQRT2) / 4
    return ProcessMatrix((_party("A"), _party("B")), m)


def ocb_tripartite() -> ProcessMatrix:
    """Charlie (trivial input, qubit output) added to the OCB construction.

    (1/4)(I + Z_A1 Z_B1 Z_B2 X_C2 / sqrt 2 + Z_A2 Z_B1 Z_C2 / sqrt 2).
    """
    slots = ["A1", "A2", "B1", "B2", "C2"]
    m = (pauli_string(slots, {})
         + pauli_string(slots, {"A1": "z", "B1": "z", "B2": "z", "C2": "x"}) / SQRT2
         + pauli_string(slots, {"A2": "z", "B1": "z", "C2": "z"}) / SQRT2) / 4
    return ProcessMatrix((_party("A"), _party("B"), _party("C", 1, QUBIT)), m)


def ocb_tripartite_extended() -> ProcessMatrix:
    """The tripartite variant with Charlie and Bob sharing |Phi+><Phi+| / 2 on (C1', B1')."""
    return extend_with_ancilla(ocb_tripartite(), maximally_entangled(2, normalized=True),
                               [("C", 2), ("B", 2)])


def wocb2_operator() -> np.ndarray:
    """(1/4)(I + Z_A1 Z_B1 X_B1' Z_B2 / sqrt 2 + Z_A2 Z_B1 Z_B1' / sqrt 2) on A1 A2 B1 B1' B2.

    As written this has trace 8; the valid process matrix is its rescaling,
    see :func:`ocb_teleported`.
    """
    slots = ["A1", "A2", "B1", "B1'", "B2"]
    return (pauli_string(slots, {})
            + pauli_string(slots, {"A1": "z", "B1": "z", "B1'": "x", "B2": "z"}) / SQRT2
            + pauli_string(slots, {"A2": "z", "B1": "z", "B1'": "z"}) / SQRT2) / 4


def ocb_teleported() -> ProcessMatrix:
    """Alice-Bob matrix left by Charlie's |Phi+> event, Bob's input being (B1 B1').

    :func:`wocb2_operator` rescaled to trace d_A2 d_B2 = 4.
    """
    m = wocb2_operator()
    return ProcessMatrix((_party("A"), _party("B", 4, QUBIT)), m * (4 / np.trace(m).real))


@dataclass(frozen=True)
class SwitchParams:
    psi: tuple[complex, complex] = (1.0, 0.0)

    def __post_init__(self):
        v = np.asarray(self.psi, dtype=complex)
        if v.shape != (2,) or abs(np.linalg.norm(v) - 1) > 1e-12:
            raise ValueError("psi must be a normalized qubit state")

    @property
    def vector(self) -> np.ndarray:
        return np.asarray(self.psi, dtype=complex)


def switch_vector(params: SwitchParams = SwitchParams()) -> np.ndarray:
    """|W> on slots A1 A2 B1 B2 C1 with C1 = control ⊗ system, equal control amplitudes."""
    psi = params.vector
    phi = np.eye(2)
    v = np.zeros((2, 2, 2, 2, 2, 2), dtype=complex)  # a1 a2 b1 b2 control system
    # control 0: psi into A1, A2 -> B1, B2 -> system
    v[:, :, :, :, 0, :] = np.einsum("a,xb,yc->axbyc", psi, phi, phi)
    # control 1: psi into B1, B2 -> A1, A2 -> system
    v[:, :, :, :, 1, :] = np.einsum("b,ya,xc->axbyc", psi, phi, phi)
    return v.reshape(-1) / SQRT2


def switch_process(params: SwitchParams = SwitchParams()) -> ProcessMatrix:
    v = switch_vector(params)
    return ProcessMatrix((_party("A"), _party("B"), _party("C", 4, 1)), np.outer(v, v.conj()))


def switch_reduced_expected(params: SwitchParams = SwitchParams()) -> ProcessMatrix:
    """Equal mixture of psi -> A -> B (B's output discarded) and psi -> B -> A."""
    psi = params.vector
    rho = np.outer(psi, psi.conj())
    phi = maximally_entangled(2)
    # slots A1 A2 B1 B2
    first = kron(rho, phi, np.eye(2))
    second_t = np.kron(np.kron(rho, phi), np.eye(2)).reshape([2] * 8)
    # second_t slots: (B1, B2, A1, A2); reorder to (A1, A2, B1, B2)
    second = second_t.transpose(2, 3, 0, 1, 6, 7, 4, 5).reshape(16, 16)
    return ProcessMatrix((_party("A"), _party("B")), (first + second) / 2)


# ---------------------------------------------------------------------------
# probes


def unitary_instrument_single(party: PartySpec, u: np.ndarray) -> Instrument:
    return Instrument(party, (choi_from_kraus(party, [u]).matrix,))


def switch_unitary_probe(ua: np.ndarray, ub: np.ndarray, params: SwitchParams = SwitchParams()) -> dict:
    """Charlie measures the control in the x basis after Alice and Bob apply ua and ub once each.

    Returns the outcome probabilities; commuting pairs give '+' with
    certainty and anticommuting pairs give '-'.
    """
    w = switch_process(params)
    a, b, c = w.parties
    plus = np.array([1, 1]) / SQRT2
    minus = np.array([1, -1]) / SQRT2
    povm = (np.kron(np.outer(plus, plus), np.eye(2)), np.kron(np.outer(minus, minus), np.eye(2)))
    charlie = Instrument(c, povm)
    p = probabilities(w, [unitary_instrument_single(a, ua), unitary_instrument_single(b, ub), charlie])
    return {"+": float(p[0, 0, 0]), "-": float(p[0, 0, 1])}


# ---------------------------------------------------------------------------
# pipelines


@dataclass
class Stage:
    name: str
    ok: bool
    detail: dict

    def to_dict(self) -> dict:
        return {"stage": self.name, "ok": self.ok, **self.detail}


@dataclass
class PipelineReport:
    name: str
    stages: list[Stage]
    verdict: str

    @property
    def ok(self) -> bool:
        return all(s.ok for s in self.stages)

    def stage(self, name: str) -> Stage:
        for s in self.stages:
            if s.name == name:
                return s
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"pipeline": self.name, "ok": self.ok, "verdict": self.verdict,
                "stages": [s.to_dict() for s in self.stages]}


def _validation_stage(name: str, w: ProcessMatrix, tol: Tolerances) -> Stage:
    rep = validate(w, tol)
    return Stage(name, rep.ok, {"min_eigenvalue": rep.min_eigenvalue, "trace": rep.trace,
                                "failures": rep.failures})


def ocb_pipeline(tol: Tolerances = DEFAULT_TOLERANCES, seed: int = 0,
                 budgets: SolverBudgets = SolverBudgets()) -> PipelineReport:
    """Validity, the exact causal bound of the game, a seesaw violation and LP rejection."""
    from .polytope import causal_bound

    w = ocb_process()
    g = ocb_game()
    stages = [_validation_stage("validate", w, tol)]
    types = sorted(t.label for t in term_types_present(w, tol.coefficient_zero))
    stages.append(Stage("term_types", types == ["1", "A1B1B2", "A2B1"], {"types": types}))
    bound = causal_bound(g, exact=True)
    stages.append(Stage("causal_bound", bound.value == Fraction(3, 4), bound.to_dict()))
    q = optimize_quantum_value(w, g, budgets, seed=seed)
    stages.append(Stage("seesaw", q.value > float(bound.value), {"value": q.value, "sweeps": q.sweeps}))
    mem = causal_membership(q.table)
    stages.append(Stage("causal_membership", mem.status == "infeasible",
                        {"status": mem.status, "violated_margin": mem.margin}))
    verdict = "non-causal: violates the causal bound" if all(s.ok for s in stages) else "reproduction failed"
    return PipelineReport("ocb", stages, verdict)


def switch_nonseparability_pipeline(params: SwitchParams = SwitchParams(),
                                    tol: Tolerances = DEFAULT_TOLERANCES,
                                    budgets: SolverBudgets = SolverBudgets()) -> PipelineReport:
    w = switch_process(params)
    stages = [_validation_stage("validate", w, tol)]
    cert = rank1_nonseparability_certificate(w, tol)
    stages.append(Stage("rank1_certificate", cert is not None, {"certificate": cert}))
    sig = {}
    for x in w.names:
        rep = no_signaling_matrix(w, [n for n in w.names if n != x], [x], tol.coefficient_zero)
        sig[x] = not rep.no_signaling
    stages.append(Stage("signaling_to_each_party", all(sig.values()), {"signaling_to": sig}))
    red = reduced_matrix(w, ["A", "B"], tol.coefficient_zero)
    dev = float(np.max(np.abs(red.matrix - switch_reduced_expected(params).matrix)))
    stages.append(Stage("reduced_matrix", dev <= 1e-12, {"max_deviation": dev}))
    sep = bipartite_causal_sep(red, budgets, tol)
    stages.append(Stage("reduced_causally_separable", sep.feasible,
                        {"status": sep.status, "residual": sep.residual, "iterations": sep.iterations}))
    commuting = switch_unitary_probe(PAULI["i"], PAULI["z"], params)
    anti = switch_unitary_probe(PAULI["x"], PAULI["z"], params)
    probe_ok = abs(commuting["+"] - 1) <= 1e-9 and abs(anti["-"] - 1) <= 1e-9
    stages.append(Stage("unitary_probe", probe_ok, {"commuting": commuting, "anticommuting": anti}))
    verdict = "causal, not causally separable" if all(s.ok for s in stages) else "reproduction failed"
    return PipelineReport("switch", stages, verdict)


def random_charlie_event(rng, d_out: int = QUBIT) -> np.ndarray:
    """CJ operator of a random CP map for a party with trivial input (trace <= 1)."""
    return random_density(d_out, rng) * rng.uniform(0.2, 1.0)


def is_locally_diagonal(w: ProcessMatrix, tol: float = 1e-12) -> bool:
    """Diagonal in the product computational basis."""
    m = w.matrix
    return float(np.max(np.abs(m - np.diag(np.diag(m))))) <= tol


def ocb_tripartite_pipeline(events: int = 20, seed: int = 0, tol: Tolerances = DEFAULT_TOLERANCES,
                            budgets: SolverBudgets = SolverBudgets(),
                            sep_residual: float = 1e-6) -> PipelineReport:
    """Evidence that the tripartite variant is causally separable."""
    w = ocb_tripartite()
    stages = [_validation_stage("validate", w, tol)]
    ns = no_signaling_matrix(w, ["A", "B"], ["C"], tol.coefficient_zero)
    stages.append(Stage("no_signaling_to_C", ns.no_signaling, {"offending_types": ns.offending}))
    rng = np.random.default_rng(seed)
    results = []
    for _ in range(events):
        ev = random_charlie_event(rng)
        cond = condition_on_event(w, "C", ev, tol)
        sep = bipartite_causal_sep(cond.matrix, budgets, tol)
        results.append({"probability": cond.probability, "valid": cond.ok,
                        "diagonal": is_locally_diagonal(cond.matrix),
                        "sep_status": sep.status, "residual": sep.residual})
    ok = all(r["valid"] and r["diagonal"] and r["sep_status"] == "feasible" and r["residual"] <= sep_residual
             for r in results)
    stages.append(Stage("conditional_processes_separable", ok, {"events": results}))
    verdict = "causally separable evidence complete" if all(s.ok for s in stages) else "evidence incomplete"
    return PipelineReport("ocb-tripartite", stages, verdict)


def adaptive_bob(instrument: Instrument) -> Instrument:
    """Bob's strategy on (B1 B1') -> B2 reproducing his OCB instrument on B1 -> B2.

    Measure B1 in the z basis; on |0> apply the instrument with B1' in place
    of B1, on |1> apply it conjugated by sigma_y on B1'.
    """
    party = PartySpec(instrument.party.name, 2 * instrument.party.d_in, instrument.party.d_out)
    y = np.kron(PAULI["y"], np.eye(instrument.party.d_out))
    p0 = np.diag([1.0, 0.0]).astype(complex)
    p1 = np.diag([0.0, 1.0]).astype(complex)
    ops = tuple(np.kron(p0, m) + np.kron(p1, y @ m @ y) for m in instrument.operators)
    return Instrument(party, ops)


def activation_pipeline(seed: int = 0, tol: Tolerances = DEFAULT_TOLERANCES,
                        budgets: SolverBudgets = SolverBudgets(), events: int = 20,
                        exact_check: bool = True) -> PipelineReport:
    pre = ocb_tripartite_pipeline(events, seed, tol, budgets)
    stages = [Stage("pre_extension_separable", pre.ok, {"verdict": pre.verdict})]
    ext = ocb_tripartite_extended()
    stages.append(_validation_stage("extended_valid", ext, tol))
    event = CJOperator(ext.party("C"), maximally_entangled(2))
    cond = condition_on_event(ext, "C", event, tol)
    literal = wocb2_operator()
    scale = float(np.trace(cond.matrix.matrix).real / np.trace(literal).real)
    dev = float(np.max(np.abs(cond.matrix.matrix - scale * literal)))
    stages.append(Stage("conditional_matrix", dev <= 1e-12 and cond.ok,
                        {"max_deviation": dev, "normalization": scale, "probability": cond.probability}))
    game = ocb_game()
    q = optimize_quantum_value(ocb_process(), game, budgets, seed=seed)
    alice, bob = q.instruments
    direct = q.table
    adapted = probability_table(cond.matrix, [alice, [adaptive_bob(i) for i in bob]])
    gap = float(np.max(np.abs(adapted.p - direct.p)))
    stages.append(Stage("adaptive_strategy_table", gap <= 1e-9,
                        {"max_deviation": gap, "game_value": game.value(adapted)}))
    mem = causal_membership(adapted)
    detail = {"status": mem.status, "violated_margin": mem.margin}
    ok = mem.status == "infeasible"
    if exact_check:
        ex = causal_membership(adapted, exact=True)
        detail["exact_status"] = ex.status
        ok = ok and ex.status == "infeasible"
    stages.append(Stage("post_extension_noncausal", ok, detail))
    verdict = "activation demonstrated" if all(s.ok for s in stages) else "activation not reproduced"
    return PipelineReport("activation", stages, verdict)


GALLERY = {
    "ocb": ocb_process,
    "ocb-tripartite": ocb_tripartite,
    "ocb-tripartite-extended": ocb_tripartite_extended,
    "ocb-teleported": ocb_teleported,
    "switch": switch_process,
    "switch-reduced": switch_reduced_expected,
}
