"""Choi-Jamiolkowski operators, instruments and CPTP checks.

Convention: for a CP map M from X1 to X2 the CJ operator is

    M^{X1 X2} = [ (I ⊗ M)(|phi+><phi+|) ]^T,   |phi+> = sum_j |j>|j>  (unnormalized),

with the transpose taken in the fixed computational product basis. Under this
convention a measure-and-prepare map rho -> Tr(E rho) sigma has CJ operator
E ⊗ sigma^T, and a map with a one-dimensional output and POVM element E has
CJ operator E.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config import DEFAULT_TOLERANCES
from .qlinalg import TensorSpace, is_hermitian, matrix_from_dict, matrix_to_dict, partial_trace


@dataclass(frozen=True)
class PartySpec:
    name: str
    d_in: int
    d_out: int

    def __post_init__(self):
        if self.d_in < 1 or self.d_out < 1:
            raise ValueError(f"party {self.name}: dimensions must be >= 1")

    @property
    def in_label(self) -> str:
        return f"{self.name}1"

    @property
    def out_label(self) -> str:
        return f"{self.name}2"

    @property
    def dim(self) -> int:
        return self.d_in * self.d_out

    @property
    def space(self) -> TensorSpace:
        return TensorSpace(((self.in_label, self.d_in), (self.out_label, self.d_out)))

    def to_dict(self) -> dict:
        return {"name": self.name, "d_in": self.d_in, "d_out": self.d_out}

    @classmethod
    def from_dict(cls, data: dict) -> "PartySpec":
        return cls(str(data["name"]), int(data["d_in"]), int(data["d_out"]))


@dataclass(frozen=True)
class CJOperator:
    party: PartySpec
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.party.dim, self.party.dim):
            raise ValueError(f"CJ operator for {self.party.name} must be "
                             f"{self.party.dim}x{self.party.dim}, got {m.shape}")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class Instrument:
    """An ordered list of CJ operators (one per outcome) on one party."""

    party: PartySpec
    operators: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self):
        ops = tuple(CJOperator(self.party, op).matrix for op in self.operators)
        if not ops:
            raise ValueError("an instrument needs at least one outcome")
        object.__setattr__(self, "operators", ops)

    @property
    def outcomes(self) -> list[CJOperator]:
        return [CJOperator(self.party, op) for op in self.operators]

    def __len__(self):
        return len(self.operators)

    @property
    def total(self) -> np.ndarray:
        return sum(self.operators)

    def check(self, tol: float = DEFAULT_TOLERANCES.cptp) -> "CPTPReport":
        return is_cptp(CJOperator(self.party, self.total), tol)

    def to_dict(self) -> dict:
        return {"party": self.party.to_dict(),
                "outcomes": [matrix_to_dict(op, self.party.space) for op in self.operators]}

    @classmethod
    def from_dict(cls, data: dict) -> "Instrument":
        party = PartySpec.from_dict(data["party"])
        return cls(party, tuple(matrix_from_dict(o)[0] for o in data["outcomes"]))


@dataclass
class CPTPReport:
    ok: bool
    min_eigenvalue: float
    trace_deviation: float
    violations: list[str]

    def __bool__(self):
        return self.ok


def choi_from_kraus(party: PartySpec, kraus: Sequence[np.ndarray],
                    tol: float = DEFAULT_TOLERANCES.cptp) -> CJOperator:
    """CJ operator of rho -> sum_k E_k rho E_k^dagger."""
    kraus = [np.asarray(k, dtype=complex) for k in kraus]
    for k in kraus:
        if k.shape != (party.d_out, party.d_in):
            raise ValueError(f"Kraus operator shape {k.shape} != ({party.d_out}, {party.d_in})")
    completeness = sum(k.conj().T @ k for k in kraus)
    excess = np.linalg.eigvalsh(completeness - np.eye(party.d_in))[-1]
    if excess > tol:
        raise ValueError(f"Kraus operators exceed completeness by {excess:.3g}")
    m = np.zeros((party.dim, party.dim), dtype=complex)
    for k in kraus:
        # (I ⊗ E)|phi+> has components v[j*d_out + a] = E[a, j]
        v = k.T.reshape(-1)
        m += np.outer(v.conj(), v)
    return CJOperator(party, m)


def is_cptp(op: CJOperator, tol: float = DEFAULT_TOLERANCES.cptp) -> CPTPReport:
    m = op.matrix
    violations = []
    if not is_hermitian(m, tol):
        violations.append("not Hermitian")
    min_eig = float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])
    if min_eig < -tol:
        violations.append(f"not positive semidefinite (min eigenvalue {min_eig:.3g})")
    reduced = partial_trace(m, op.party.space, [op.party.in_label])
    dev = float(np.max(np.abs(reduced - np.eye(op.party.d_in))))
    if dev > tol:
        violations.append(f"not trace preserving (max |Tr_out M - I| = {dev:.3g})")
    return CPTPReport(not violations, min_eig, dev, violations)


def measure_prepare(party: PartySpec, povm: Sequence[np.ndarray],
                    preparations: Sequence[np.ndarray],
                    tol: float = DEFAULT_TOLERANCES.cptp) -> Instrument:
    """Instrument measuring ``povm`` on the input and preparing ``preparations[j]``."""
    if len(povm) != len(preparations):
        raise ValueError("povm and preparations must have equal length")
    povm = [np.asarray(e, dtype=complex) for e in povm]
    preparations = [np.asarray(r, dtype=complex) for r in preparations]
    for e in povm:
        if e.shape != (party.d_in, party.d_in):
            raise ValueError("POVM element has wrong shape")
        if np.linalg.eigvalsh((e + e.conj().T) / 2)[0] < -tol:
            raise ValueError("POVM element is not positive semidefinite")
    if np.max(np.abs(sum(povm) - np.eye(party.d_in))) > tol:
        raise ValueError("POVM elements do not sum to the identity")
    for r in preparations:
        if r.shape != (party.d_out, party.d_out):
            raise ValueError("preparation has wrong shape")
        if np.linalg.eigvalsh((r + r.conj().T) / 2)[0] < -tol or abs(np.trace(r) - 1) > tol:
            raise ValueError("preparation is not a density matrix")
    return Instrument(party, tuple(np.kron(e, r.T) for e, r in zip(povm, preparations)))


def maximally_entangled(d: int, normalized: bool = False) -> np.ndarray:
    """|phi+><phi+| with |phi+> = sum_j |jj>, divided by d when ``normalized``."""
    if d < 1:
        raise ValueError("dimension must be positive")
    v = np.eye(d, dtype=complex).reshape(-1)
    m = np.outer(v, v.conj())
    return m / d if normalized else m


def unitary_instrument(party: PartySpec, u: np.ndarray) -> Instrument:
    return Instrument(party, (choi_from_kraus(party, [u]).matrix,))


def trash_instrument(party: PartySpec) -> Instrument:
    """Single outcome: discard the input, output the maximally mixed state."""
    return Instrument(party, (np.eye(party.dim, dtype=complex) / party.d_out,))
