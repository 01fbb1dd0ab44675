import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from causality_kit.config import SolverBudgets
from causality_kit.convexsep import (PreconditionError, bipartite_causal_sep, bipartite_spec, check_witness,
                                     fixed_first_ecs, fixed_first_spec, rank1_nonseparability_certificate,
                                     tripartite_ecs, tripartite_spec)
from causality_kit.gallery import ocb_process, ocb_tripartite, switch_process
from causality_kit.generators import (bipartite_separable, channel_with_memory, controlled_order_process,
                                      tripartite_ecs_process)
from causality_kit.procmat import ProcessMatrix, identity_process
from causality_kit.qlinalg import kron
from causality_kit.reports import CERTIFIED_INFEASIBLE, FEASIBLE
from conftest import qubits

seeds = st.integers(0, 2 ** 32 - 1)
Z = np.diag([1.0, -1.0])
I2 = np.eye(2)


def assert_consistent(rep):
    # feasible reports carry blocks and no certificate; certified ones the reverse
    if rep.status == FEASIBLE:
        assert rep.blocks and rep.certificate is None
    if rep.status == CERTIFIED_INFEASIBLE:
        assert not rep.blocks and rep.certificate


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_separable_bipartite_found(seed):
    rng = np.random.default_rng(seed)
    a, b = qubits("AB")
    w = bipartite_separable(a, b, rng)
    rep = bipartite_causal_sep(w)
    assert rep.feasible
    assert check_witness(w.matrix, bipartite_spec(w), rep.blocks) == []
    assert_consistent(rep)


def test_fixed_order_bipartite_found(rng):
    a, b = qubits("AB")
    assert bipartite_causal_sep(channel_with_memory(a, b, rng))


def test_ocb_not_separable():
    rep = bipartite_causal_sep(ocb_process(), SolverBudgets(dykstra_iterations=600))
    assert not rep.feasible
    assert rep.residual > 1e-4
    assert_consistent(rep)


def test_unsupported_types_certificate():
    w = identity_process(qubits("AB"))
    m = w.matrix + 0.01 * kron(I2, Z, I2, Z)  # A2B2 fits in neither block
    rep = bipartite_causal_sep(ProcessMatrix(w.parties, m))
    assert rep.status == CERTIFIED_INFEASIBLE
    assert rep.certificate["kind"] == "unsupported-term-types"
    assert "A2B2" in rep.certificate["slot_patterns"]


@settings(max_examples=4, deadline=None)
@given(seeds, st.sampled_from([0, 1, 2]))
def test_fixed_first_found(seed, first):
    rng = np.random.default_rng(seed)
    parties = qubits("ABC")
    w = controlled_order_process(parties, first, rng)
    rep = fixed_first_ecs(w, parties[first].name)
    assert rep.feasible
    assert check_witness(w.matrix, fixed_first_spec(w, parties[first].name), rep.blocks) == []


def test_fixed_first_precondition(rng):
    w = controlled_order_process(qubits("ABC"), 0, rng)
    with pytest.raises(PreconditionError):
        fixed_first_ecs(w, "B")


@settings(max_examples=4, deadline=None)
@given(seeds)
def test_tripartite_ecs_found(seed):
    w = tripartite_ecs_process(qubits("ABC"), np.random.default_rng(seed))
    rep = tripartite_ecs(w)
    assert rep.feasible
    assert check_witness(w.matrix, tripartite_spec(w), rep.blocks) == []
    assert_consistent(rep)


def test_switch_certified():
    w = switch_process()
    cert = rank1_nonseparability_certificate(w)
    assert cert["kind"] == "rank-one-with-signaling-to-every-party"
    assert set(cert["signaling_types"]) == {"A", "B", "C"}
    rep = tripartite_ecs(w)
    assert rep.status == CERTIFIED_INFEASIBLE
    assert_consistent(rep)


def test_no_certificate_for_mixed_or_causal(rng):
    assert rank1_nonseparability_certificate(ocb_tripartite()) is None
    assert rank1_nonseparability_certificate(tripartite_ecs_process(qubits("ABC"), rng)) is None


def test_witness_checker_flags_tampering(rng):
    a, b = qubits("AB")
    w = bipartite_separable(a, b, rng)
    rep = bipartite_causal_sep(w)
    blocks = dict(rep.blocks)
    key = next(iter(blocks))
    blocks[key] = blocks[key] - 0.5 * np.eye(blocks[key].shape[0])
    problems = check_witness(w.matrix, bipartite_spec(w), blocks)
    assert any("not PSD" in p for p in problems)
    assert any("miss the target" in p for p in problems)


def test_history_recorded(rng):
    a, b = qubits("AB")
    rep = bipartite_causal_sep(channel_with_memory(a, b, rng))
    assert rep.history and rep.history[-1] <= 1e-7


def test_arity_checks():
    with pytest.raises(ValueError):
        bipartite_causal_sep(switch_process())
    with pytest.raises(ValueError):
        tripartite_ecs(ocb_process())


@pytest.mark.parametrize("make", ["channel", "ecs", "ocb", "ocb-tripartite"])
def test_residual_non_increasing(make):
    from causality_kit.convexsep import solve_spec
    rng = np.random.default_rng(11)
    a, b, c = qubits("ABC")
    w, spec = {
        "channel": lambda: (lambda w: (w, bipartite_spec(w)))(channel_with_memory(a, b, rng)),
        "ecs": lambda: (lambda w: (w, tripartite_spec(w)))(tripartite_ecs_process((a, b, c), rng)),
        "ocb": lambda: (ocb_process(), bipartite_spec(ocb_process())),
        "ocb-tripartite": lambda: (ocb_tripartite(), tripartite_spec(ocb_tripartite())),
    }[make]()
    rep = solve_spec(w, spec, SolverBudgets(dykstra_iterations=1500), log_every=1)
    gaps = np.array(rep.history[:-1])
    assert np.all(np.diff(gaps[10:]) <= 1e-12)


def test_certificate_excludes_acceptance_on_gallery():
    # run the projection solver without the certificate short-cut
    from causality_kit.convexsep import solve_spec
    from causality_kit.gallery import GALLERY
    for name, make in GALLERY.items():
        w = make()
        if len(w.parties) != 3:
            continue
        cert = rank1_nonseparability_certificate(w)
        rep = solve_spec(w, tripartite_spec(w), SolverBudgets(dykstra_iterations=400))
        assert not (cert is not None and rep.feasible), name
