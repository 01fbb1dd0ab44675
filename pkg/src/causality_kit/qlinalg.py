"""Dense linear algebra over labeled tensor-product spaces.

Matrices are plain complex ``numpy`` arrays. A :class:`TensorSpace` carries the
ordered subsystem labels and dimensions that give those arrays meaning; slot 0
is the most significant factor of the row/column index.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .config import DEFAULT_TOLERANCES


class NotHermitianError(ValueError):
    pass


@dataclass(frozen=True)
class TensorSpace:
    slots: tuple[tuple[str, int], ...]

    def __post_init__(self):
        slots = tuple((str(label), int(dim)) for label, dim in self.slots)
        labels = [label for label, _ in slots]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate slot labels in {labels}")
        if any(dim < 1 for _, dim in slots):
            raise ValueError("slot dimensions must be positive")
        object.__setattr__(self, "slots", slots)

    @classmethod
    def of(cls, *pairs: tuple[str, int]) -> "TensorSpace":
        return cls(tuple(pairs))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.slots)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.slots)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.slots else 1

    def __len__(self):
        return len(self.slots)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown slot label {label!r}; have {self.labels}") from None

    def dim(self, label: str) -> int:
        return self.slots[self.index(label)][1]

    def subspace(self, labels: Iterable[str]) -> "TensorSpace":
        """Slots named in ``labels``, kept in this space's order."""
        wanted = set(labels)
        for label in wanted:
            self.index(label)
        return TensorSpace(tuple(s for s in self.slots if s[0] in wanted))

    def to_dict(self) -> list[dict]:
        return [{"label": label, "dim": dim} for label, dim in self.slots]


# ---------------------------------------------------------------------------
# elementary operations


def kron(*mats: np.ndarray) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def is_hermitian(m: np.ndarray, tol: float = DEFAULT_TOLERANCES.hermiticity) -> bool:
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and float(np.max(np.abs(m - m.conj().T), initial=0.0)) <= tol


def _check_square(m: np.ndarray, space: TensorSpace):
    d = space.total_dim
    if m.shape != (d, d):
        raise ValueError(f"matrix shape {m.shape} does not match space dimension {d}")


def partial_trace(m: np.ndarray, space: TensorSpace, keep: Iterable[str]) -> np.ndarray:
    """Trace out every slot not in ``keep``; kept slots stay in ``space`` order."""
    m = np.asarray(m)
    _check_square(m, space)
    keep = set(keep)
    for label in keep:
        space.index(label)
    dims = space.dims
    n = len(dims)
    t = m.reshape(dims + dims)
    kept = [i for i in range(n) if space.labels[i] in keep]
    traced = [i for i in range(n) if i not in kept]
    if not traced:
        return m.copy()
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    row = [letters[i] for i in range(n)]
    col = [letters[n + i] if i in kept else letters[i] for i in range(n)]
    out = [row[i] for i in kept] + [col[i] for i in kept]
    r = np.einsum("".join(row) + "".join(col) + "->" + "".join(out), t)
    dk = int(np.prod([dims[i] for i in kept], dtype=np.int64)) if kept else 1
    return r.reshape(dk, dk)


def permute_slots(m: np.ndarray, space: TensorSpace, order: Sequence[str]) -> np.ndarray:
    """Reorder the tensor factors of ``m`` so that slots appear in ``order``."""
    m = np.asarray(m)
    _check_square(m, space)
    if sorted(order) != sorted(space.labels):
        raise ValueError("order must be a permutation of the space labels")
    perm = [space.index(label) for label in order]
    n = len(perm)
    t = m.reshape(space.dims + space.dims)
    t = t.transpose(perm + [n + p for p in perm])
    return t.reshape(m.shape)


def embed(m: np.ndarray, space: TensorSpace, full: TensorSpace) -> np.ndarray:
    """Tensor ``m`` (on ``space``) with identities on the remaining slots of ``full``."""
    extra = [s for s in full.slots if s[0] not in space.labels]
    d_extra = int(np.prod([d for _, d in extra], dtype=np.int64)) if extra else 1
    big = np.kron(m, np.eye(d_extra))
    joint = TensorSpace(space.slots + tuple(extra))
    return permute_slots(big, joint, full.labels)


# ---------------------------------------------------------------------------
# Hilbert-Schmidt basis


@functools.lru_cache(maxsize=None)
def _hs_basis_array(d: int) -> np.ndarray:
    if d == 1:
        basis = [np.ones((1, 1), dtype=complex)]
    elif d == 2:
        basis = [
            np.eye(2, dtype=complex),
            np.array([[0, 1], [1, 0]], dtype=complex),
            np.array([[0, -1j], [1j, 0]], dtype=complex),
            np.array([[1, 0], [0, -1]], dtype=complex),
        ]
    else:
        scale = np.sqrt(d / 2)
        basis = [np.eye(d, dtype=complex)]
        sym, anti, diag = [], [], []
        for j in range(d):
            for k in range(j + 1, d):
                s = np.zeros((d, d), dtype=complex)
                s[j, k] = s[k, j] = 1
                sym.append(scale * s)
                a = np.zeros((d, d), dtype=complex)
                a[j, k], a[k, j] = -1j, 1j
                anti.append(scale * a)
        for l in range(1, d):
            g = np.zeros((d, d), dtype=complex)
            g[np.arange(l), np.arange(l)] = 1
            g[l, l] = -l
            diag.append(scale * np.sqrt(2 / (l * (l + 1))) * g)
        basis += sym + anti + diag
    arr = np.array(basis)
    arr.setflags(write=False)
    return arr


def hs_basis(d: int) -> list[np.ndarray]:
    """Hermitian basis with sigma_0 = identity and Tr(s_mu s_nu) = d delta_mu_nu.

    Pauli matrices (I, X, Y, Z) for d = 2; rescaled generalized Gell-Mann
    matrices otherwise, ordered symmetric, antisymmetric, diagonal.
    """
    if d < 1:
        raise ValueError("dimension must be positive")
    return list(_hs_basis_array(d))


_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


@functools.lru_cache(maxsize=None)
def _expand_subscripts(n: int) -> tuple[str, str]:
    rows, cols, mus = _LETTERS[:n], _LETTERS[n:2 * n], _LETTERS[2 * n:3 * n]
    operands = ",".join(mus[k] + cols[k] + rows[k] for k in range(n))
    expand = rows + cols + "," + operands + "->" + mus
    reconstruct = mus + "," + ",".join(mus[k] + rows[k] + cols[k] for k in range(n)) + "->" + rows + cols
    return expand, reconstruct


def hs_coefficients(m: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    """Complex coefficients Tr(m sigma_alpha)/D as an array of shape (d_k^2, ...)."""
    dims = tuple(dims)
    n = len(dims)
    D = int(np.prod(dims, dtype=np.int64))
    if n == 0:
        return np.asarray(m, dtype=complex).reshape(())
    expand, _ = _expand_subscripts(n)
    t = np.asarray(m).reshape(dims + dims)
    return np.einsum(expand, t, *[_hs_basis_array(d) for d in dims], optimize=True) / D


def hs_expand(m: np.ndarray, space: TensorSpace,
              tol: float = DEFAULT_TOLERANCES.hermiticity) -> np.ndarray:
    """Real Hilbert-Schmidt coefficients of a Hermitian matrix.

    The result is indexed by one basis index per slot; ``w[0, ..., 0]`` is the
    identity coefficient.
    """
    m = np.asarray(m)
    _check_square(m, space)
    c = hs_coefficients(m, space.dims)
    if c.size and np.max(np.abs(c.imag)) > tol:
        raise NotHermitianError(f"imaginary HS coefficient {np.max(np.abs(c.imag)):.3g}")
    return c.real.copy()


def hs_reconstruct(coeffs: np.ndarray, space: TensorSpace) -> np.ndarray:
    dims = space.dims
    n = len(dims)
    D = space.total_dim
    if n == 0:
        return np.asarray(coeffs, dtype=complex).reshape(1, 1)
    _, reconstruct = _expand_subscripts(n)
    t = np.einsum(reconstruct, np.asarray(coeffs, dtype=complex),
                  *[_hs_basis_array(d) for d in dims], optimize=True)
    return t.reshape(D, D)


# ---------------------------------------------------------------------------
# spectra


def eig_hermitian(m: np.ndarray, tol: float = DEFAULT_TOLERANCES.hermiticity):
    """Ascending real eigenvalues and orthonormal eigenvectors (columns)."""
    m = np.asarray(m)
    if not is_hermitian(m, tol * max(1.0, float(np.max(np.abs(m), initial=0.0)))):
        raise NotHermitianError("eig_hermitian requires a Hermitian matrix")
    return np.linalg.eigh((m + m.conj().T) / 2)


def project_psd(m: np.ndarray, tol: float = DEFAULT_TOLERANCES.hermiticity) -> np.ndarray:
    """Nearest positive-semidefinite matrix in Frobenius norm."""
    vals, vecs = eig_hermitian(m, tol)
    vals = np.clip(vals, 0.0, None)
    return (vecs * vals) @ vecs.conj().T


def min_eigenvalue(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])


# ---------------------------------------------------------------------------
# matrix file format


def matrix_to_dict(m: np.ndarray, space: TensorSpace) -> dict:
    m = np.asarray(m)
    _check_square(m, space)
    flat = m.reshape(-1)
    return {"slots": space.to_dict(),
            "entries": [[float(z.real), float(z.imag)] for z in flat]}


def matrix_from_dict(data: dict) -> tuple[np.ndarray, TensorSpace]:
    space = TensorSpace(tuple((s["label"], s["dim"]) for s in data["slots"]))
    entries = np.asarray(data["entries"], dtype=float)
    d = space.total_dim
    if entries.shape != (d * d, 2):
        raise ValueError(f"expected {d * d} [re, im] entries, got shape {entries.shape}")
    m = (entries[:, 0] + 1j * entries[:, 1]).reshape(d, d)
    return m, space


def dumps_matrix(m: np.ndarray, space: TensorSpace) -> str:
    return json.dumps(matrix_to_dict(m, space))
