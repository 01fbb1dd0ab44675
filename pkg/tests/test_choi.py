import numpy as np
import pytest

from causality_kit.choi import (CJOperator, Instrument, PartySpec, choi_from_kraus, is_cptp, maximally_entangled,
                                measure_prepare, trash_instrument, unitary_instrument)
from causality_kit.generators import random_density, random_kraus, random_unitary
from causality_kit.qlinalg import partial_trace


def test_identity_channel_is_phi_plus():
    p = PartySpec("A", 3, 3)
    assert np.allclose(choi_from_kraus(p, [np.eye(3)]).matrix, maximally_entangled(3))


def test_maximally_entangled_normalization():
    assert abs(np.trace(maximally_entangled(4, normalized=True)) - 1) < 1e-12
    with pytest.raises(ValueError):
        maximally_entangled(0)


def test_cj_action(rng):
    # M is the fully transposed Choi operator: E(rho) = Tr_in[(rho ⊗ I) M]^T
    p = PartySpec("A", 2, 3)
    kraus = random_kraus(2, 3, rng)
    m = choi_from_kraus(p, kraus).matrix
    rho = random_density(2, rng)
    out = partial_trace(np.kron(rho, np.eye(3)) @ m, p.space, [p.out_label]).T
    assert np.allclose(out, sum(k @ rho @ k.conj().T for k in kraus))


def test_random_channel_is_cptp(rng):
    p = PartySpec("A", 2, 2)
    assert is_cptp(choi_from_kraus(p, random_kraus(2, 2, rng)))


def test_non_tp_detected(rng):
    p = PartySpec("A", 2, 2)
    op = CJOperator(p, 0.5 * maximally_entangled(2))
    rep = is_cptp(op)
    assert not rep
    assert any("trace preserving" in v for v in rep.violations)


def test_kraus_validation():
    p = PartySpec("A", 2, 2)
    with pytest.raises(ValueError):
        choi_from_kraus(p, [2 * np.eye(2)])
    with pytest.raises(ValueError):
        choi_from_kraus(p, [np.eye(3)])


def test_measure_prepare(rng):
    p = PartySpec("B", 2, 2)
    e0 = np.diag([1.0, 0.0])
    r = random_density(2, rng)
    inst = measure_prepare(p, [e0, np.eye(2) - e0], [r, r])
    assert np.allclose(inst.operators[0], np.kron(e0, r.T))
    assert inst.check()
    with pytest.raises(ValueError):
        measure_prepare(p, [e0], [r])
    with pytest.raises(ValueError):
        measure_prepare(p, [e0, e0], [r, r])


def test_trivial_output_povm():
    p = PartySpec("C", 2, 1)
    e = np.diag([0.3, 0.7])
    inst = measure_prepare(p, [e, np.eye(2) - e], [np.eye(1), np.eye(1)])
    assert np.allclose(inst.operators[0], e)


def test_instrument_round_trip(rng):
    p = PartySpec("A", 2, 2)
    inst = unitary_instrument(p, random_unitary(2, rng))
    back = Instrument.from_dict(inst.to_dict())
    assert back.party == p
    assert np.allclose(back.operators[0], inst.operators[0])
    assert trash_instrument(p).check()


def test_party_spec():
    p = PartySpec("X", 2, 3)
    assert (p.in_label, p.out_label, p.dim) == ("X1", "X2", 6)
    with pytest.raises(ValueError):
        PartySpec("X", 0, 1)
