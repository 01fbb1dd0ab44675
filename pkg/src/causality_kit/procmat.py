"""Process matrices: validity, the probability rule, term types and signaling.

A process matrix over parties X = (A, B, ...) lives on the slots
A1 A2 B1 B2 ... in that order, where X1 is the input and X2 the output of
party X. Its Hilbert-Schmidt expansion terms are classified by
:class:`TermType`: which slots carry a nontrivial basis element.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .choi import CJOperator, Instrument, PartySpec
from .config import DEFAULT_TOLERANCES, Tolerances
from .correlations import CausalConfiguration, ProbabilityTable, Scenario
from .qlinalg import (TensorSpace, hs_coefficients, hs_reconstruct, is_hermitian, matrix_from_dict,
                      matrix_to_dict, min_eigenvalue, partial_trace, permute_slots)


class ReducedMatrixUndefined(ValueError):
    pass


class ZeroProbabilityEvent(ValueError):
    pass


def parties_space(parties: Sequence[PartySpec]) -> TensorSpace:
    slots = []
    for p in parties:
        slots += list(p.space.slots)
    return TensorSpace(tuple(slots))


# ---------------------------------------------------------------------------
# term types


@dataclass(frozen=True, order=True)
class TermType:
    """Per party, whether the input and output slots carry a nontrivial basis element."""

    parties: tuple[str, ...]
    flags: tuple[tuple[bool, bool], ...]

    def __post_init__(self):
        if len(self.parties) != len(self.flags):
            raise ValueError("one flag pair per party")
        object.__setattr__(self, "flags", tuple((bool(a), bool(b)) for a, b in self.flags))

    @classmethod
    def identity(cls, parties: Sequence[str]) -> "TermType":
        return cls(tuple(parties), ((False, False),) * len(parties))

    @classmethod
    def from_slots(cls, parties: Sequence[str], nontrivial: Iterable[str]) -> "TermType":
        """Build from slot labels such as ``["A1", "B2"]``."""
        nontrivial = set(nontrivial)
        flags = tuple((f"{p}1" in nontrivial, f"{p}2" in nontrivial) for p in parties)
        known = {f"{p}{k}" for p in parties for k in (1, 2)}
        if not nontrivial <= known:
            raise ValueError(f"unknown slots {sorted(nontrivial - known)}")
        return cls(tuple(parties), flags)

    @classmethod
    def parse(cls, parties: Sequence[str], label: str) -> "TermType":
        """Parse labels like ``"A1B1B2"`` or ``"1"`` (identity); party names are single tokens."""
        if label in ("1", "Id", "id", ""):
            return cls.identity(parties)
        slots, rest = [], label
        names = sorted(parties, key=len, reverse=True)
        while rest:
            for name in names:
                if rest.startswith(name) and len(rest) > len(name) and rest[len(name)] in "12":
                    slots.append(rest[:len(name) + 1])
                    rest = rest[len(name) + 1:]
                    break
            else:
                raise ValueError(f"cannot parse term type {label!r}")
        return cls.from_slots(parties, slots)

    @property
    def slots(self) -> tuple[str, ...]:
        out = []
        for p, (i, o) in zip(self.parties, self.flags):
            if i:
                out.append(f"{p}1")
            if o:
                out.append(f"{p}2")
        return tuple(out)

    @property
    def is_identity(self) -> bool:
        return not any(i or o for i, o in self.flags)

    @property
    def label(self) -> str:
        return "".join(self.slots) or "1"

    def __str__(self):
        return self.label

    def restrict(self, names: Iterable[str]) -> "TermType":
        names = set(names)
        idx = [k for k, p in enumerate(self.parties) if p in names]
        return TermType(tuple(self.parties[k] for k in idx), tuple(self.flags[k] for k in idx))

    def is_allowed(self) -> bool:
        """Identity, or some party has a nontrivial input and a trivial output."""
        return self.is_identity or any(i and not o for i, o in self.flags)


def _flag_options(d_in: int, d_out: int):
    ins = (False, True) if d_in > 1 else (False,)
    outs = (False, True) if d_out > 1 else (False,)
    return [(i, o) for i in ins for o in outs]


def all_term_types(parties: Sequence[PartySpec]) -> list[TermType]:
    names = tuple(p.name for p in parties)
    options = [_flag_options(p.d_in, p.d_out) for p in parties]
    return [TermType(names, combo) for combo in itertools.product(*options)]


def allowed_term_types(parties: Sequence[PartySpec]) -> set[TermType]:
    return {t for t in all_term_types(parties) if t.is_allowed()}


def forbidden_term_types(parties: Sequence[PartySpec]) -> set[TermType]:
    return {t for t in all_term_types(parties) if not t.is_allowed()}


def allowed_type_count(n: int) -> int:
    """Closed form 4^n - 3^n + 1 for n parties with nontrivial slots."""
    return 4 ** n - 3 ** n + 1


def no_signaling_types(parties: Sequence[PartySpec], from_: Iterable[str]) -> set[TermType]:
    """Types whose restriction onto ``from_`` is allowed for a process of ``from_`` alone."""
    from_ = set(from_)
    return {t for t in all_term_types(parties) if t.restrict(from_).is_allowed()}


# ---------------------------------------------------------------------------
# process matrices


@dataclass(frozen=True)
class ProcessMatrix:
    parties: tuple[PartySpec, ...]
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        parties = tuple(self.parties)
        names = [p.name for p in parties]
        if len(set(names)) != len(names):
            raise ValueError("party names must be unique")
        m = np.asarray(self.matrix, dtype=complex)
        d = parties_space(parties).total_dim
        if m.shape != (d, d):
            raise ValueError(f"matrix shape {m.shape} does not match parties (dimension {d})")
        object.__setattr__(self, "parties", parties)
        object.__setattr__(self, "matrix", m)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.parties)

    @property
    def space(self) -> TensorSpace:
        return parties_space(self.parties)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def party(self, name: str) -> PartySpec:
        for p in self.parties:
            if p.name == name:
                return p
        raise KeyError(f"unknown party {name!r}")

    @property
    def output_dim(self) -> int:
        return int(np.prod([p.d_out for p in self.parties]))

    @property
    def input_dim(self) -> int:
        return int(np.prod([p.d_in for p in self.parties]))

    def to_dict(self) -> dict:
        out = matrix_to_dict(self.matrix, self.space)
        out["parties"] = [p.to_dict() for p in self.parties]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ProcessMatrix":
        m, space = matrix_from_dict(data)
        parties = tuple(PartySpec.from_dict(p) for p in data["parties"])
        if space != parties_space(parties):
            raise ValueError("slot list does not match the declared parties")
        return cls(parties, m)


def _check_names(w: ProcessMatrix, names: Iterable[str]) -> list[str]:
    names = list(names)
    for n in names:
        w.party(n)
    return names


def type_magnitudes(w: ProcessMatrix) -> np.ndarray:
    """Max |coefficient| per slot-level type pattern, shape (2,) * number of slots.

    Entry [f1, f2, ...] with f = 1 meaning the slot is nontrivial.
    """
    coeffs = np.abs(hs_coefficients(w.matrix, w.space.dims))
    agg = coeffs
    for axis in range(coeffs.ndim):
        first = np.take(agg, [0], axis=axis)
        rest = np.take(agg, range(1, agg.shape[axis]), axis=axis)
        if rest.shape[axis] == 0:
            rest = np.zeros_like(first)
        else:
            rest = rest.max(axis=axis, keepdims=True)
        agg = np.concatenate([first, rest], axis=axis)
    return agg


def term_types_present(w: ProcessMatrix, tol: float = DEFAULT_TOLERANCES.coefficient_zero) -> dict[TermType, float]:
    agg = type_magnitudes(w)
    out = {}
    for pattern in zip(*np.nonzero(agg > tol)):
        flags = tuple((bool(pattern[2 * k]), bool(pattern[2 * k + 1])) for k in range(len(w.parties)))
        out[TermType(w.names, flags)] = float(agg[pattern])
    return out


@dataclass
class ValidationReport:
    ok: bool
    hermitian: bool
    min_eigenvalue: float
    trace: float
    expected_trace: float
    identity_coefficient: float
    expected_identity_coefficient: float
    forbidden_types: dict[str, float]
    failures: list[str]

    def __bool__(self):
        return self.ok

    def to_dict(self) -> dict:
        return {"ok": self.ok, "hermitian": self.hermitian, "min_eigenvalue": self.min_eigenvalue,
                "trace": self.trace, "expected_trace": self.expected_trace,
                "identity_coefficient": self.identity_coefficient,
                "expected_identity_coefficient": self.expected_identity_coefficient,
                "forbidden_types": self.forbidden_types, "failures": self.failures}


def validate(w: ProcessMatrix, tol: Tolerances = DEFAULT_TOLERANCES) -> ValidationReport:
    """Check positivity, the allowed-type rule and the normalization of ``w``."""
    failures = []
    m = w.matrix
    herm = is_hermitian(m, tol.hermiticity)
    if not herm:
        failures.append("not Hermitian")
    lam = min_eigenvalue(m)
    if lam < tol.psd:
        failures.append(f"not positive semidefinite (min eigenvalue {lam:.3g})")
    trace = float(np.trace(m).real)
    if abs(trace - w.output_dim) > tol.trace:
        failures.append(f"trace {trace:.12g} != product of output dimensions {w.output_dim}")
    present = term_types_present(w, tol.coefficient_zero)
    ident = TermType.identity(w.names)
    id_coeff = float(np.real(np.trace(m))) / w.dim
    expected_id = 1.0 / w.input_dim
    if abs(id_coeff - expected_id) > tol.trace:
        failures.append(f"identity coefficient {id_coeff:.12g} != {expected_id:.12g}")
    forbidden = {t.label: mag for t, mag in sorted(present.items()) if t != ident and not t.is_allowed()}
    if forbidden:
        failures.append("forbidden term types: " + ", ".join(forbidden))
    return ValidationReport(not failures, herm, lam, trace, float(w.output_dim), id_coeff,
                            expected_id, forbidden, failures)


# ---------------------------------------------------------------------------
# probability rule


_LET = "abcdefghijklmnopqrstuvwxyz"


def probabilities(w: ProcessMatrix, instruments: Sequence[Instrument],
                  tol: float = DEFAULT_TOLERANCES.probability) -> np.ndarray:
    """Joint outcome distribution p[j1, ..., jn] = Tr[W (M_j1 ⊗ ... ⊗ M_jn)]."""
    if len(instruments) != len(w.parties):
        raise ValueError("need one instrument per party")
    for inst, party in zip(instruments, w.parties):
        if inst.party.d_in != party.d_in or inst.party.d_out != party.d_out:
            raise ValueError(f"instrument for {party.name} has dimensions "
                             f"({inst.party.d_in}, {inst.party.d_out}), expected ({party.d_in}, {party.d_out})")
    n = len(w.parties)
    dims = [p.dim for p in w.parties]
    t = w.matrix.reshape(dims + dims)
    rows, cols, outs = _LET[:n], _LET[n:2 * n], _LET[2 * n:3 * n]
    spec = rows + cols + "," + ",".join(outs[k] + cols[k] + rows[k] for k in range(n)) + "->" + outs
    p = np.einsum(spec, t, *[np.array(inst.operators) for inst in instruments], optimize=True)
    if np.max(np.abs(p.imag), initial=0.0) > max(tol, 1e-9):
        raise ValueError("complex probabilities: operator is not Hermitian")
    return p.real


def probability_table(w: ProcessMatrix, settings: Sequence[Sequence[Instrument]]) -> ProbabilityTable:
    """Full correlation table for per-party lists of instruments (one per setting)."""
    if len(settings) != len(w.parties):
        raise ValueError("need a list of instruments per party")
    n_out = []
    for insts in settings:
        counts = {len(i) for i in insts}
        if len(counts) != 1:
            raise ValueError("all instruments of one party must have the same number of outcomes")
        n_out.append(counts.pop())
    scenario = Scenario(w.names, tuple(len(s) for s in settings), tuple(n_out))
    p = np.zeros(scenario.shape)
    for s in itertools.product(*(range(len(x)) for x in settings)):
        p[s] = probabilities(w, [settings[k][s[k]] for k in range(len(s))])
    return ProbabilityTable(scenario, p)


# ---------------------------------------------------------------------------
# signaling, reduction, conditioning


@dataclass
class SignalingReport:
    no_signaling: bool
    from_: tuple[str, ...]
    to: tuple[str, ...]
    offending: dict[str, float]

    def __bool__(self):
        return self.no_signaling

    def to_dict(self) -> dict:
        return {"from": list(self.from_), "to": list(self.to), "no_signaling": self.no_signaling,
                "offending_types": self.offending}


def no_signaling_matrix(w: ProcessMatrix, from_: Iterable[str], to: Iterable[str] | None = None,
                        tol: float = DEFAULT_TOLERANCES.coefficient_zero) -> SignalingReport:
    """No signaling from ``from_`` to the rest, decided on term types.

    Holds iff every present term restricted onto the ``from_`` slots is an
    allowed type for a process of ``from_`` alone.
    """
    src = _check_names(w, from_)
    if to is None:
        dst = [n for n in w.names if n not in src]
    else:
        dst = _check_names(w, to)
    if set(src) & set(dst):
        raise ValueError("signaling subsets overlap")
    if set(src) | set(dst) != set(w.names):
        raise ValueError("signaling subsets must partition the parties")
    offending = {}
    for t, mag in sorted(term_types_present(w, tol).items()):
        if not t.restrict(src).is_allowed():
            offending[t.label] = mag
    order = [n for n in w.names]
    return SignalingReport(not offending, tuple(n for n in order if n in src),
                           tuple(n for n in order if n in dst), offending)


def _party_labels(w: ProcessMatrix, names: Iterable[str]) -> list[str]:
    names = set(names)
    return [lab for p in w.parties if p.name in names for lab in (p.in_label, p.out_label)]


def reduced_matrix(w: ProcessMatrix, keep: Iterable[str],
                   tol: float = DEFAULT_TOLERANCES.coefficient_zero) -> ProcessMatrix:
    """Process matrix seen by ``keep`` when the others use arbitrary CPTP maps.

    Equal to Tr_discarded(W) divided by the discarded output dimensions, which
    is what the discarded parties' trash instruments produce. Defined only if
    there is no signaling from the discarded parties to the kept ones.
    """
    keep = _check_names(w, keep)
    drop = [n for n in w.names if n not in keep]
    if not drop:
        return w
    if not keep:
        raise ValueError("keep at least one party")
    rep = no_signaling_matrix(w, drop, tol=tol)
    if not rep:
        raise ReducedMatrixUndefined(
            f"reduced process undefined (signaling into kept set's marginal): "
            f"types {sorted(rep.offending)} signal from {drop}")
    m = partial_trace(w.matrix, w.space, _party_labels(w, keep))
    norm = np.prod([w.party(n).d_out for n in drop])
    return ProcessMatrix(tuple(p for p in w.parties if p.name in keep), m / norm)


@dataclass
class ConditionedProcess:
    matrix: ProcessMatrix
    probability: float
    report: ValidationReport

    @property
    def ok(self) -> bool:
        return self.report.ok


def condition_on_event(w: ProcessMatrix, party: str, event: CJOperator | np.ndarray,
                       tol: Tolerances = DEFAULT_TOLERANCES) -> ConditionedProcess:
    """Process of the remaining parties given that ``party`` realized ``event``.

    The event probability must not depend on the other parties' instruments,
    i.e. there must be no signaling from the rest to ``party``.
    """
    spec = w.party(party)
    e = event.matrix if isinstance(event, CJOperator) else np.asarray(event, dtype=complex)
    if e.shape != (spec.dim, spec.dim):
        raise ValueError(f"event must be {spec.dim}x{spec.dim}")
    rest = [n for n in w.names if n != party]
    if not rest:
        raise ValueError("conditioning needs at least one remaining party")
    rep = no_signaling_matrix(w, rest, tol=tol.coefficient_zero)
    if not rep:
        raise ReducedMatrixUndefined(
            f"event probability depends on the other parties (types {sorted(rep.offending)})")
    p = float(np.real(np.trace(reduced_matrix(w, [party], tol.coefficient_zero).matrix @ e)))
    if p <= 1e-12:
        raise ZeroProbabilityEvent(f"zero-probability event (p = {p:.3g})")
    k = w.names.index(party)
    before = int(np.prod([q.dim for q in w.parties[:k]]))
    after = int(np.prod([q.dim for q in w.parties[k + 1:]]))
    t = w.matrix.reshape(before, spec.dim, after, before, spec.dim, after)
    out = np.einsum("axbcyd,yx->abcd", t, e).reshape(before * after, before * after) / p
    new = ProcessMatrix(tuple(q for q in w.parties if q.name != party), out)
    return ConditionedProcess(new, p, validate(new, tol))


def extend_with_ancilla(w: ProcessMatrix, rho: np.ndarray, ancillas: Sequence[tuple[str, int]],
                        tol: float = DEFAULT_TOLERANCES.trace) -> ProcessMatrix:
    """W ⊗ rho with each ancilla factor appended to a party's input slot.

    ``ancillas`` lists (party, dim) for the tensor factors of ``rho`` in order.
    A party's new input is (original input) ⊗ (its ancillas, in listed order).
    """
    rho = np.asarray(rho, dtype=complex)
    d_anc = int(np.prod([d for _, d in ancillas])) if ancillas else 1
    if rho.shape != (d_anc, d_anc):
        raise ValueError(f"ancilla state must be {d_anc}x{d_anc}")
    if not is_hermitian(rho, tol) or min_eigenvalue(rho) < -tol or abs(np.trace(rho) - 1) > tol:
        raise ValueError("ancilla state is not a density matrix")
    for name, _ in ancillas:
        w.party(name)
    anc_labels = [f"{name}1'{k}" for k, (name, _) in enumerate(ancillas)]
    joint = TensorSpace(w.space.slots + tuple((lab, d) for lab, (_, d) in zip(anc_labels, ancillas)))
    order, parties = [], []
    for p in w.parties:
        mine = [lab for lab, (name, _) in zip(anc_labels, ancillas) if name == p.name]
        order += [p.in_label] + mine + [p.out_label]
        extra = int(np.prod([joint.dim(lab) for lab in mine])) if mine else 1
        parties.append(PartySpec(p.name, p.d_in * extra, p.d_out))
    m = permute_slots(np.kron(w.matrix, rho), joint, order)
    return ProcessMatrix(tuple(parties), m)


# ---------------------------------------------------------------------------
# fixed causal order


def _subsets(names: Sequence[str]):
    for r in range(1, len(names) + 1):
        yield from (list(c) for c in itertools.combinations(names, r))


def _bipartitions(names: Sequence[str]):
    for r in range(1, len(names)):
        for src in itertools.combinations(names, r):
            yield list(src), [x for x in names if x not in src]


@dataclass
class OrderReport:
    ok: bool
    violated: dict | None = None

    def __bool__(self):
        return self.ok


def fixed_order_compatible(w: ProcessMatrix, config: CausalConfiguration,
                           tol: float = DEFAULT_TOLERANCES.coefficient_zero) -> OrderReport:
    """Matrix-level test of compatibility with a fixed causal configuration.

    For the full matrix and each well-defined reduced matrix, signaling across
    a bipartition (S, rest) is only tolerated if some member of S precedes
    some member of the rest.
    """
    if set(config.parties) != set(w.names):
        raise ValueError("configuration and matrix name different parties")
    for subset in _subsets(w.names):
        if len(subset) < 2:
            continue
        if len(subset) < len(w.names):
            try:
                sub = reduced_matrix(w, subset, tol)
            except ReducedMatrixUndefined:
                continue
        else:
            sub = w
        for src, dst in _bipartitions(sub.names):
            rep = no_signaling_matrix(sub, src, dst, tol)
            if not rep and not config.some_precedes(src, dst):
                return OrderReport(False, {"process": list(sub.names), "from": src, "to": dst,
                                           "offending_types": rep.offending})
    return OrderReport(True)


def signaling_summary(w: ProcessMatrix, tol: float = DEFAULT_TOLERANCES.coefficient_zero) -> list[dict]:
    """No-signaling verdicts for every bipartition of the parties."""
    return [no_signaling_matrix(w, src, dst, tol).to_dict() for src, dst in _bipartitions(w.names)]


def identity_process(parties: Sequence[PartySpec]) -> ProcessMatrix:
    """The maximally mixed valid matrix I / prod(d_in)."""
    parties = tuple(parties)
    d = parties_space(parties).total_dim
    d_in = int(np.prod([p.d_in for p in parties]))
    return ProcessMatrix(parties, np.eye(d, dtype=complex) / d_in)


def process_from_terms(parties: Sequence[PartySpec], terms: Mapping[tuple[int, ...], float]) -> ProcessMatrix:
    """Matrix from HS coefficients keyed by per-slot basis index tuples."""
    parties = tuple(parties)
    space = parties_space(parties)
    coeffs = np.zeros(tuple(d * d for d in space.dims))
    for idx, c in terms.items():
        coeffs[tuple(idx)] = c
    return ProcessMatrix(parties, hs_reconstruct(coeffs, space))
