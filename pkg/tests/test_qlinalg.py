import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from causality_kit.generators import random_density, random_hermitian
from causality_kit.qlinalg import (NotHermitianError, TensorSpace, dumps_matrix, eig_hermitian, embed, hs_basis,
                                   hs_coefficients, hs_expand, hs_reconstruct, is_hermitian, kron,
                                   matrix_from_dict, min_eigenvalue, partial_trace, permute_slots, project_psd)

dims = st.lists(st.integers(1, 3), min_size=1, max_size=3)


def space_of(ds):
    return TensorSpace(tuple((f"s{k}", d) for k, d in enumerate(ds)))


def test_kron_order():
    a = np.diag([1.0, 2.0])
    b = np.array([[0, 1], [1, 0]])
    assert np.allclose(kron(a, b), np.kron(a, b))
    assert kron().shape == (1, 1)


def test_space_rejects_duplicates():
    with pytest.raises(ValueError):
        TensorSpace((("a", 2), ("a", 2)))


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_hs_basis_orthogonal(d):
    basis = hs_basis(d)
    assert len(basis) == d * d
    assert np.allclose(basis[0], np.eye(d))
    gram = np.array([[np.trace(a.conj().T @ b) for b in basis] for a in basis])
    assert np.allclose(gram, d * np.eye(d * d))
    for s in basis[1:]:
        assert abs(np.trace(s)) < 1e-12
        assert np.allclose(s, s.conj().T)


def test_pauli_basis_for_qubits():
    x, y, z = hs_basis(2)[1:]
    assert np.allclose(x, [[0, 1], [1, 0]])
    assert np.allclose(y, [[0, -1j], [1j, 0]])
    assert np.allclose(z, [[1, 0], [0, -1]])


@settings(max_examples=40, deadline=None)
@given(dims, st.integers(0, 2 ** 32 - 1))
def test_hs_round_trip(ds, seed):
    sp = space_of(ds)
    m = random_hermitian(sp.total_dim, np.random.default_rng(seed))
    c = hs_expand(m, sp)
    assert np.isrealobj(c)
    assert np.allclose(hs_reconstruct(c, sp), m, atol=1e-12)


def test_hs_expand_rejects_non_hermitian():
    sp = space_of([2])
    with pytest.raises(NotHermitianError):
        hs_expand(np.array([[0, 1], [0, 0]], dtype=complex), sp)


def test_hs_coefficients_of_product():
    z = hs_basis(2)[3]
    c = hs_coefficients(kron(z, np.eye(2)) / 4, (2, 2))
    assert abs(c[3, 0] - 0.25) < 1e-12
    assert np.sum(np.abs(c) > 1e-12) == 1


@settings(max_examples=30, deadline=None)
@given(dims, st.integers(0, 2 ** 32 - 1))
def test_partial_trace_preserves_trace(ds, seed):
    sp = space_of(ds)
    m = random_density(sp.total_dim, np.random.default_rng(seed))
    keep = sp.labels[:1]
    r = partial_trace(m, sp, keep)
    assert abs(np.trace(r) - 1) < 1e-12
    assert min_eigenvalue(r) > -1e-12


def test_partial_trace_of_product(rng):
    a, b, c = random_density(2, rng), random_density(3, rng), random_density(2, rng)
    sp = TensorSpace((("a", 2), ("b", 3), ("c", 2)))
    m = kron(a, b, c)
    assert np.allclose(partial_trace(m, sp, ["a", "c"]), np.kron(a, c))
    assert np.allclose(partial_trace(m, sp, ["b"]), b)
    assert np.allclose(partial_trace(m, sp, []), [[1.0]])


def test_permute_and_embed(rng):
    a, b = random_density(2, rng), random_density(3, rng)
    sp = TensorSpace((("a", 2), ("b", 3)))
    assert np.allclose(permute_slots(np.kron(a, b), sp, ["b", "a"]), np.kron(b, a))
    full = TensorSpace((("x", 2), ("a", 2), ("b", 3)))
    assert np.allclose(embed(np.kron(a, b), sp, full), kron(np.eye(2), a, b))


def test_eig_and_projection(rng):
    h = random_hermitian(5, rng)
    vals, vecs = eig_hermitian(h)
    assert np.all(np.diff(vals) >= 0)
    assert np.allclose(vecs @ np.diag(vals) @ vecs.conj().T, h)
    p = project_psd(h)
    assert min_eigenvalue(p) > -1e-12
    # projection is idempotent and no further than any other PSD matrix tried
    assert np.allclose(project_psd(p), p)
    other = random_density(5, rng)
    assert np.linalg.norm(h - p) <= np.linalg.norm(h - other) + 1e-12
    with pytest.raises(NotHermitianError):
        eig_hermitian(np.array([[0, 1], [0, 0]], dtype=complex))


def test_matrix_json_round_trip(rng):
    sp = TensorSpace((("A1", 2), ("B1", 3)))
    m = random_hermitian(6, rng)
    back, sp2 = matrix_from_dict(json.loads(dumps_matrix(m, sp)))
    assert sp2 == sp
    assert np.max(np.abs(back - m)) <= 1e-12


def test_matrix_json_shape_check():
    with pytest.raises(ValueError):
        matrix_from_dict({"slots": [{"label": "a", "dim": 2}], "entries": [[1, 0]]})


def test_is_hermitian():
    assert is_hermitian(np.eye(3))
    assert not is_hermitian(np.array([[0, 1], [0, 0]]))
