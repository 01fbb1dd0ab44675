import numpy as np
import pytest

from causality_kit.choi import PartySpec
from causality_kit.gallery import (GALLERY, PAULI, SwitchParams, activation_pipeline, adaptive_bob, ocb_pipeline,
                                   ocb_process, ocb_teleported, ocb_tripartite, ocb_tripartite_extended,
                                   ocb_tripartite_pipeline, switch_nonseparability_pipeline, switch_process,
                                   switch_reduced_expected, switch_unitary_probe, wocb2_operator)
from causality_kit.procmat import reduced_matrix, validate
from causality_kit.qlinalg import hs_expand

SQRT2 = np.sqrt(2)


def test_ocb_coefficients():
    w = ocb_process()
    c = hs_expand(w.matrix, w.space)
    expected = np.zeros_like(c)
    expected[0, 0, 0, 0] = 1 / 4
    expected[3, 0, 1, 3] = 1 / (4 * SQRT2)  # Z_A1 X_B1 Z_B2
    expected[0, 3, 3, 0] = 1 / (4 * SQRT2)  # Z_A2 Z_B1
    assert np.max(np.abs(c - expected)) <= 1e-12


@pytest.mark.parametrize("name", sorted(GALLERY))
def test_gallery_matrices_valid(name):
    rep = validate(GALLERY[name]())
    assert rep.ok, rep.failures


def test_wocb2_literal_normalization():
    lit = wocb2_operator()
    assert np.trace(lit).real == pytest.approx(8.0)
    assert np.trace(ocb_teleported().matrix).real == pytest.approx(4.0)


def test_extended_dimensions():
    ext = ocb_tripartite_extended()
    assert [(p.name, p.d_in, p.d_out) for p in ext.parties] == [("A", 2, 2), ("B", 4, 2), ("C", 2, 2)]
    assert [(p.d_in, p.d_out) for p in ocb_tripartite().parties] == [(2, 2), (2, 2), (1, 2)]


@pytest.mark.parametrize("psi", [(1.0, 0.0), (1 / SQRT2, 1 / SQRT2), (0.6, 0.8j)])
def test_switch_reduced_matrix(psi):
    params = SwitchParams(psi)
    red = reduced_matrix(switch_process(params), ["A", "B"])
    assert np.max(np.abs(red.matrix - switch_reduced_expected(params).matrix)) <= 1e-12


@pytest.mark.parametrize("psi", [(1.0, 0.0), (1 / SQRT2, 1 / SQRT2)])
def test_switch_probe(psi):
    params = SwitchParams(psi)
    for a, b in [("i", "z"), ("x", "x"), ("z", "z")]:
        assert switch_unitary_probe(PAULI[a], PAULI[b], params)["+"] == pytest.approx(1, abs=1e-12)
    for a, b in [("x", "z"), ("y", "z"), ("x", "y")]:
        assert switch_unitary_probe(PAULI[a], PAULI[b], params)["-"] == pytest.approx(1, abs=1e-12)


def test_switch_params_validated():
    with pytest.raises(ValueError):
        SwitchParams((1.0, 1.0))


def test_switch_pipeline():
    rep = switch_nonseparability_pipeline(SwitchParams((1 / SQRT2, 1 / SQRT2)))
    assert rep.ok, rep.to_dict()
    assert rep.verdict == "causal, not causally separable"
    assert rep.stage("reduced_matrix").detail["max_deviation"] <= 1e-12


def test_ocb_pipeline():
    rep = ocb_pipeline()
    assert rep.ok
    assert rep.stage("causal_bound").detail == {"bound": "3/4", "exact": True}
    assert rep.stage("causal_membership").detail["status"] == "infeasible"


def test_tripartite_pipeline():
    rep = ocb_tripartite_pipeline(events=5, seed=2)
    assert rep.ok and rep.verdict == "causally separable evidence complete"


def test_activation_pipeline():
    rep = activation_pipeline(seed=0, events=5)
    assert rep.ok, [s.to_dict() for s in rep.stages if not s.ok]
    cond = rep.stage("conditional_matrix").detail
    assert cond["max_deviation"] <= 1e-12
    assert cond["normalization"] == pytest.approx(0.5)
    assert rep.stage("post_extension_noncausal").detail["exact_status"] == "infeasible"
    assert rep.stage("adaptive_strategy_table").detail["game_value"] > 0.75


def test_adaptive_bob_is_an_instrument():
    from causality_kit.choi import unitary_instrument
    from causality_kit.generators import random_unitary
    inst = unitary_instrument(PartySpec("B", 2, 2), random_unitary(2, np.random.default_rng(0)))
    adapted = adaptive_bob(inst)
    assert adapted.party.d_in == 4
    assert adapted.check()


def test_pipeline_reports_are_deterministic():
    a = switch_nonseparability_pipeline().to_dict()
    b = switch_nonseparability_pipeline().to_dict()
    assert a == b
