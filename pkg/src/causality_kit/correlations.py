"""Classical multiparty correlation tables.

A :class:`ProbabilityTable` stores p(o^1 ... o^n | s^1 ... s^n) as a dense
array whose first n axes are the settings and whose last n axes are the
outcomes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .config import DEFAULT_TOLERANCES


class ReducedProcessUndefined(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    parties: tuple[str, ...]
    settings: tuple[int, ...]
    outcomes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "parties", tuple(str(p) for p in self.parties))
        object.__setattr__(self, "settings", tuple(int(s) for s in self.settings))
        object.__setattr__(self, "outcomes", tuple(int(o) for o in self.outcomes))
        n = len(self.parties)
        if len(set(self.parties)) != n:
            raise ValueError("party names must be unique")
        if len(self.settings) != n or len(self.outcomes) != n:
            raise ValueError("need one setting and one outcome cardinality per party")
        if min(self.settings + self.outcomes, default=1) < 1:
            raise ValueError("cardinalities must be >= 1")

    @property
    def n(self) -> int:
        return len(self.parties)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.settings + self.outcomes

    def index(self, party: str) -> int:
        try:
            return self.parties.index(party)
        except ValueError:
            raise KeyError(f"unknown party {party!r}") from None

    def restrict(self, keep: Sequence[str]) -> "Scenario":
        idx = [self.index(p) for p in self.parties if p in set(keep)]
        return Scenario(tuple(self.parties[i] for i in idx),
                        tuple(self.settings[i] for i in idx),
                        tuple(self.outcomes[i] for i in idx))

    def to_dict(self) -> dict:
        return {"parties": list(self.parties), "settings": list(self.settings),
                "outcomes": list(self.outcomes)}

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        return cls(tuple(data["parties"]), tuple(data["settings"]), tuple(data["outcomes"]))


@dataclass(frozen=True)
class ProbabilityTable:
    scenario: Scenario
    p: np.ndarray = field(repr=False)
    tol: float = field(default=DEFAULT_TOLERANCES.probability, repr=False, compare=False)

    def __post_init__(self):
        p = np.asarray(self.p)
        if p.dtype != object:
            p = p.astype(float)
        if p.shape != self.scenario.shape:
            raise ValueError(f"table shape {p.shape} != scenario shape {self.scenario.shape}")
        n = self.scenario.n
        if p.dtype != object:
            if p.size and p.min() < -max(self.tol, 1e-12):
                raise ValueError(f"negative probability {p.min():.3g}")
            sums = p.sum(axis=tuple(range(n, 2 * n)))
            if sums.size and np.max(np.abs(sums - 1)) > self.tol:
                raise ValueError(f"rows do not sum to one (max deviation {np.max(np.abs(sums - 1)):.3g})")
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.scenario.n

    def to_dict(self) -> dict:
        return {"scenario": self.scenario.to_dict(), "p": np.asarray(self.p, dtype=float).tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "ProbabilityTable":
        return cls(Scenario.from_dict(data["scenario"]), np.asarray(data["p"], dtype=float))


def _subset_indices(scenario: Scenario, names: Iterable[str]) -> list[int]:
    return sorted({scenario.index(p) for p in names})


def _check_partition(scenario: Scenario, from_: Iterable[str], to: Iterable[str] | None):
    src = _subset_indices(scenario, from_)
    if to is None:
        dst = [i for i in range(scenario.n) if i not in src]
    else:
        dst = _subset_indices(scenario, to)
    if set(src) & set(dst):
        raise ValueError("signaling subsets overlap")
    return src, dst


def marginal(t: ProbabilityTable, keep_outcomes: Sequence[int]) -> np.ndarray:
    """Sum out the outcomes of parties not in ``keep_outcomes``; all settings kept."""
    n = t.n
    drop = tuple(n + i for i in range(n) if i not in keep_outcomes)
    return t.p.sum(axis=drop) if drop else t.p


def no_signaling_subset(t: ProbabilityTable, from_: Iterable[str], to: Iterable[str] | None = None,
                        tol: float = DEFAULT_TOLERANCES.probability) -> tuple[bool, float]:
    """Whether the outcome marginal of ``to`` ignores the settings of ``from_``.

    ``to`` defaults to the complement of ``from_``. Returns the verdict and the
    largest marginal discrepancy across ``from_`` settings.
    """
    src, dst = _check_partition(t.scenario, from_, to)
    if not src or not dst:
        return True, 0.0
    m = marginal(t, dst)
    spread = m.max(axis=tuple(src)) - m.min(axis=tuple(src))
    violation = float(spread.max()) if spread.size else 0.0
    return violation <= tol, violation


def reduced_process(t: ProbabilityTable, keep: Iterable[str],
                    tol: float = DEFAULT_TOLERANCES.probability) -> ProbabilityTable:
    keep_idx = _subset_indices(t.scenario, keep)
    drop = [i for i in range(t.n) if i not in keep_idx]
    ok, violation = no_signaling_subset(t, [t.scenario.parties[i] for i in drop],
                                        [t.scenario.parties[i] for i in keep_idx], tol)
    if not ok:
        raise ReducedProcessUndefined(
            f"reduced process undefined: signaling into {[t.scenario.parties[i] for i in keep_idx]} "
            f"(violation {violation:.3g})")
    m = marginal(t, keep_idx)
    # discarded settings are irrelevant; take the first one
    index = tuple(0 if i in drop else slice(None) for i in range(t.n))
    sub = m[index]
    return ProbabilityTable(t.scenario.restrict([t.scenario.parties[i] for i in keep_idx]), sub, tol)


@dataclass(frozen=True)
class ConditionalProcess:
    """p(o_rest | s_rest, s_given, o_given) for every event in the given set.

    ``p`` has axes (s_given..., o_given..., s_rest..., o_rest...) and is NaN
    where the given event has zero probability.
    """

    scenario: Scenario
    given: tuple[str, ...]
    rest: tuple[str, ...]
    p: np.ndarray = field(repr=False)
    defined: np.ndarray = field(repr=False)


def conditional_process(t: ProbabilityTable, given: Iterable[str],
                        tol: float = DEFAULT_TOLERANCES.probability) -> tuple[ConditionalProcess, ProbabilityTable]:
    """Conditional process for the complement of ``given`` plus the reduced process of ``given``."""
    red = reduced_process(t, given, tol)
    sc = t.scenario
    g = [sc.index(p) for p in red.scenario.parties]
    r = [i for i in range(t.n) if i not in g]
    n = t.n
    # reorder axes: s_g, o_g, s_r, o_r
    order = g + [n + i for i in g] + r + [n + i for i in r]
    joint = t.p.transpose(order)
    red_p = red.p.reshape(red.p.shape + (1,) * (2 * len(r)))
    defined = red.p > 0
    with np.errstate(invalid="ignore", divide="ignore"):
        cond = np.where(red_p > 0, joint / np.where(red_p > 0, red_p, 1.0), np.nan)
    cp = ConditionalProcess(sc, tuple(sc.parties[i] for i in g), tuple(sc.parties[i] for i in r),
                            cond, defined)
    return cp, red


def compose(cond: ConditionalProcess, red: ProbabilityTable) -> ProbabilityTable:
    """Recombine W^{B|A} o W^{A}, with zero where the A-event has zero probability."""
    sc = cond.scenario
    g = [sc.index(p) for p in cond.given]
    r = [sc.index(p) for p in cond.rest]
    n = sc.n
    red_p = red.p.reshape(red.p.shape + (1,) * (2 * len(r)))
    joint = np.where(red_p > 0, np.nan_to_num(cond.p) * red_p, 0.0)
    order = g + [n + i for i in g] + r + [n + i for i in r]
    inverse = np.argsort(order)
    return ProbabilityTable(sc, joint.transpose(inverse))


def mix_tables(components: Sequence[tuple[float, ProbabilityTable]],
               tol: float = DEFAULT_TOLERANCES.probability) -> ProbabilityTable:
    if not components:
        raise ValueError("nothing to mix")
    weights = np.array([w for w, _ in components], dtype=float)
    if weights.min() < 0 or abs(weights.sum() - 1) > tol:
        raise ValueError("mixture weights must be nonnegative and sum to one")
    scenario = components[0][1].scenario
    if any(t.scenario != scenario for _, t in components):
        raise ValueError("tables belong to different scenarios")
    return ProbabilityTable(scenario, sum(w * t.p for w, t in components))


# ---------------------------------------------------------------------------
# causal configurations


@dataclass(frozen=True)
class CausalConfiguration:
    """A strict partial order given as the full list of precedence pairs.

    ``precedes`` holds pairs (X, Y) meaning X is in the causal past of Y.
    Unlisted pairs are causally unrelated. The list must already be
    transitively closed; it is validated, never completed.
    """

    parties: tuple[str, ...]
    precedes: frozenset[tuple[str, str]]

    def __post_init__(self):
        parties = tuple(self.parties)
        rel = frozenset((str(a), str(b)) for a, b in self.precedes)
        object.__setattr__(self, "parties", parties)
        object.__setattr__(self, "precedes", rel)
        for a, b in rel:
            if a not in parties or b not in parties:
                raise ValueError(f"relation {a}<{b} mentions an unknown party")
            if a == b:
                raise ValueError(f"relation {a}<{a} violates irreflexivity")
            if (b, a) in rel:
                raise ValueError(f"relations {a}<{b} and {b}<{a} violate antisymmetry")
        for (a, b), (c, d) in itertools.product(rel, rel):
            if b == c and (a, d) not in rel:
                raise ValueError(f"{a}<{b} and {b}<{d} listed but {a}<{d} missing (not transitive)")

    @classmethod
    def parse(cls, parties: Sequence[str], relations: Iterable[str]) -> "CausalConfiguration":
        """Parse relations such as ``"A<B"``, ``"B>A"`` or ``"A||C"``."""
        pairs = set()
        for rel in relations:
            rel = rel.replace(" ", "")
            if "||" in rel:
                a, b = rel.split("||")
                for x in (a, b):
                    if x not in parties:
                        raise ValueError(f"unknown party {x!r}")
            elif "<" in rel:
                a, b = rel.split("<")
                pairs.add((a, b))
            elif ">" in rel:
                a, b = rel.split(">")
                pairs.add((b, a))
            else:
                raise ValueError(f"cannot parse relation {rel!r}")
        return cls(tuple(parties), frozenset(pairs))

    def some_precedes(self, earlier: Iterable[str], later: Iterable[str]) -> bool:
        later = set(later)
        return any((a, b) in self.precedes for a in earlier for b in later)


def prop21_allows(config: CausalConfiguration, from_: Iterable[str], to: Iterable[str]) -> bool:
    """Signaling from ``from_`` to ``to`` is permitted only if something in ``from_`` precedes something in ``to``."""
    return config.some_precedes(from_, to)


def _bipartitions(names: Sequence[str]):
    names = list(names)
    for r in range(1, len(names)):
        for src in itertools.combinations(names, r):
            yield list(src), [x for x in names if x not in src]


def _subsets(names: Sequence[str]):
    names = list(names)
    for r in range(1, len(names) + 1):
        yield from (list(c) for c in itertools.combinations(names, r))


@dataclass
class FixedOrderReport:
    ok: bool
    violated: tuple[list[str], list[str], list[str]] | None = None  # (process parties, from, to)
    violation: float = 0.0

    def __bool__(self):
        return self.ok


def fixed_order_causal_check(t: ProbabilityTable, config: CausalConfiguration,
                             tol: float = DEFAULT_TOLERANCES.probability) -> FixedOrderReport:
    """Compatibility with a deterministic causal configuration.

    Checks the signaling restriction for the full table and every reduced
    table that is well defined, across all bipartitions.
    """
    if set(config.parties) != set(t.scenario.parties):
        raise ValueError("configuration and table name different parties")
    for subset in _subsets(t.scenario.parties):
        if len(subset) < t.n:
            others = [x for x in t.scenario.parties if x not in subset]
            if not no_signaling_subset(t, others, subset, tol)[0]:
                continue
            sub = reduced_process(t, subset, tol)
        else:
            sub = t
        for src, dst in _bipartitions(sub.scenario.parties):
            ok, violation = no_signaling_subset(sub, src, dst, tol)
            if not ok and not prop21_allows(config, src, dst):
                return FixedOrderReport(False, (list(sub.scenario.parties), src, dst), violation)
    return FixedOrderReport(True)


def deterministic_table(scenario: Scenario, rule) -> ProbabilityTable:
    """Table with p(o|s) = 1 exactly when ``rule(s) == o`` (tuples)."""
    p = np.zeros(scenario.shape)
    for s in itertools.product(*(range(k) for k in scenario.settings)):
        o = tuple(rule(s))
        p[s + o] = 1.0
    return ProbabilityTable(scenario, p)
