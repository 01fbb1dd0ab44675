import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from causality_kit.acceptance import C_FIRST, TRIPARTITE_ALLOWED, TRIPARTITE_FORBIDDEN
from causality_kit.choi import PartySpec, maximally_entangled, trash_instrument, unitary_instrument
from causality_kit.correlations import CausalConfiguration
from causality_kit.gallery import ocb_process, switch_process
from causality_kit.generators import (bipartite_separable, channel_with_memory, fixed_order_process,
                                      random_unitary)
from causality_kit.oracles import allowed_type_count_formula, brute_force_allowed_flags
from causality_kit.procmat import (ProcessMatrix, ReducedMatrixUndefined, TermType, ZeroProbabilityEvent,
                                   all_term_types, allowed_term_types, allowed_type_count, condition_on_event,
                                   extend_with_ancilla, fixed_order_compatible, forbidden_term_types,
                                   identity_process, no_signaling_matrix, no_signaling_types, probabilities,
                                   probability_table, process_from_terms, reduced_matrix, term_types_present,
                                   validate)
from conftest import qubits


def labels(types):
    return {t.label for t in types}


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_allowed_count(n):
    parties = qubits("ABCD"[:n])
    assert len(allowed_term_types(parties)) == allowed_type_count(n) == allowed_type_count_formula(n)
    assert len(allowed_term_types(parties)) == len(brute_force_allowed_flags(n))
    assert len(all_term_types(parties)) == 4 ** n


def test_tripartite_tables():
    parties = qubits("ABC")
    assert labels(allowed_term_types(parties)) == {TermType.parse("ABC", x).label for x in TRIPARTITE_ALLOWED}
    assert labels(forbidden_term_types(parties)) == {TermType.parse("ABC", x).label for x in TRIPARTITE_FORBIDDEN}


def test_no_signaling_from_ab_matches_table():
    # valid types with C acting first: allowed, and the A,B restriction is allowed too
    parties = qubits("ABC")
    got = labels(no_signaling_types(parties, ["A", "B"])) & labels(allowed_term_types(parties))
    assert got == {TermType.parse("ABC", x).label for x in C_FIRST}
    assert len(got) == 30


def test_bipartite_allowed_includes_a1b1():
    assert "A1B1" in labels(allowed_term_types(qubits("AB")))


def test_term_type_parse_round_trip():
    for t in all_term_types(qubits("ABC")):
        assert TermType.parse("ABC", t.label) == t
    with pytest.raises(ValueError):
        TermType.parse("AB", "A3")
    assert TermType.parse(["A", "AB"], "AB1A2").slots == ("A2", "AB1")


def test_trivial_dimensions_drop_types():
    parties = (PartySpec("A", 2, 2), PartySpec("C", 2, 1))
    assert all(not t.flags[1][1] for t in all_term_types(parties))


def test_ocb_valid_and_types():
    w = ocb_process()
    assert validate(w)
    assert labels(term_types_present(w)) == {"1", "A1B1B2", "A2B1"}


def test_switch_valid():
    w = switch_process()
    rep = validate(w)
    assert rep.ok, rep.failures


def test_forbidden_type_rejected():
    w = identity_process(qubits("AB"))
    m = w.matrix + 0.05 * np.kron(np.kron(np.eye(2), np.diag([1, -1])), np.eye(4))  # A2 alone
    rep = validate(ProcessMatrix(w.parties, m))
    assert not rep
    assert "A2" in rep.forbidden_types


def test_bad_trace_rejected():
    w = identity_process(qubits("A"))
    rep = validate(ProcessMatrix(w.parties, 2 * w.matrix))
    assert not rep and any("trace" in f for f in rep.failures)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1, 2, 3]))
def test_circuits_are_valid(seed, n):
    rng = np.random.default_rng(seed)
    parties = qubits("ABC"[:n])
    w = fixed_order_process(parties, rng)
    assert validate(w), validate(w).failures
    order = CausalConfiguration(parties=tuple(p.name for p in parties),
                                precedes=frozenset(itertools.combinations([p.name for p in parties], 2)))
    assert fixed_order_compatible(w, order)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_probabilities_normalized(seed):
    rng = np.random.default_rng(seed)
    a, b = qubits("AB")
    w = bipartite_separable(a, b, rng)
    p = probabilities(w, [unitary_instrument(a, random_unitary(2, rng)),
                          unitary_instrument(b, random_unitary(2, rng))])
    assert abs(p.sum() - 1) < 1e-10
    assert p.min() > -1e-12


def test_probability_table_shape(rng):
    a, b = qubits("AB")
    w = channel_with_memory(a, b, rng)
    t = probability_table(w, [[trash_instrument(a)] * 2, [trash_instrument(b)] * 3])
    assert t.p.shape == (2, 3, 1, 1)
    assert np.allclose(t.p, 1)


def test_signaling_direction(rng):
    a, b = qubits("AB")
    w = channel_with_memory(a, b, rng)
    assert no_signaling_matrix(w, ["B"])
    assert not no_signaling_matrix(w, ["A"])
    with pytest.raises(ValueError):
        no_signaling_matrix(w, ["A"], ["A"])


def test_reduced_matrix(rng):
    parties = qubits("ABC")
    w = fixed_order_process(parties, rng)
    red = reduced_matrix(w, ["A", "B"])
    assert validate(red)
    with pytest.raises(ReducedMatrixUndefined):
        reduced_matrix(w, ["C"])


def test_reduced_matrix_equals_trash(rng):
    a, b = qubits("AB")
    w = channel_with_memory(a, b, rng)
    red = reduced_matrix(w, ["A"])
    u = random_unitary(2, rng)
    p_full = probabilities(w, [unitary_instrument(a, u), trash_instrument(b)])
    p_red = probabilities(red, [unitary_instrument(a, u)])
    assert np.allclose(p_full.reshape(-1), p_red.reshape(-1))


def test_condition_on_event(rng):
    a, b = qubits("AB")
    w = channel_with_memory(a, b, rng)
    e = np.kron(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
    c = condition_on_event(w, "A", e)
    assert c.ok and 0 < c.probability <= 1
    with pytest.raises(ZeroProbabilityEvent):
        condition_on_event(w, "A", np.zeros((4, 4)))
    with pytest.raises(ReducedMatrixUndefined):
        condition_on_event(w, "B", np.eye(4) / 2)


def test_extend_with_ancilla():
    w = ocb_process()
    ext = extend_with_ancilla(w, maximally_entangled(2, normalized=True), [("A", 2), ("B", 2)])
    assert [p.d_in for p in ext.parties] == [4, 4]
    assert validate(ext)
    with pytest.raises(ValueError):
        extend_with_ancilla(w, np.eye(4), [("A", 2), ("B", 2)])


def test_process_from_terms():
    w = process_from_terms(qubits("A"), {(0, 0): 0.5, (3, 0): 0.25})
    assert np.allclose(w.matrix, np.diag([0.75, 0.75, 0.25, 0.25]))


def test_json_round_trip():
    w = ocb_process()
    back = ProcessMatrix.from_dict(w.to_dict())
    assert back.parties == w.parties
    assert np.max(np.abs(back.matrix - w.matrix)) <= 1e-12
