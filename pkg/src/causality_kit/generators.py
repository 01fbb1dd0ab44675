"""Random states, channels, circuit process matrices and correlation tables.

Circuit process matrices are built with the link product of (non-transposed)
Choi operators C_T = sum_ij |i><j| ⊗ T(|i><j|). With the transposed CJ
convention used for instruments, the probability rule Tr[W (M_A ⊗ M_B ...)]
then reproduces the circuit statistics; tests check this against direct
Kraus-operator simulation.
"""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from .choi import PartySpec
from .correlations import ProbabilityTable, Scenario, mix_tables
from .procmat import ProcessMatrix
from .qlinalg import TensorSpace, permute_slots

# ---------------------------------------------------------------------------
# states and channels


def random_unitary(d: int, rng) -> np.ndarray:
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density(d: int, rng, rank: int | None = None) -> np.ndarray:
    k = rank or d
    g = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(d: int, rng) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (g + g.conj().T) / 2


def random_kraus(d_in: int, d_out: int, rng, n: int | None = None) -> list[np.ndarray]:
    """Kraus operators of a random CPTP map (random isometry d_in -> d_out * n)."""
    n = n or d_in * d_out
    z = rng.normal(size=(d_out * n, d_in)) + 1j * rng.normal(size=(d_out * n, d_in))
    v, _ = np.linalg.qr(z)
    return [v[k * d_out:(k + 1) * d_out] for k in range(n)]


def random_instrument_kraus(d_in: int, d_out: int, outcomes: int, rng, n: int = 2) -> list[list[np.ndarray]]:
    """Kraus operators of a random instrument (outcome -> list of Kraus ops)."""
    ks = random_kraus(d_in, d_out, rng, outcomes * n)
    return [ks[o * n:(o + 1) * n] for o in range(outcomes)]


def choi(kraus: Sequence[np.ndarray]) -> np.ndarray:
    """Non-transposed Choi operator sum_ij |i><j| ⊗ T(|i><j|) on (input, output)."""
    out = 0
    for k in kraus:
        v = np.asarray(k).T.reshape(-1)
        out = out + np.outer(v, v.conj())
    return out


def link_product(a: np.ndarray, space_a: TensorSpace, b: np.ndarray, space_b: TensorSpace,
                 order: Sequence[str] | None = None) -> tuple[np.ndarray, TensorSpace]:
    """Link product A * B = Tr_shared[(A^{T_shared} ⊗ I)(I ⊗ B)].

    Shared slots are those whose labels appear in both spaces. The result
    lives on the remaining slots of A followed by those of B, or ``order``.
    """
    shared = [lab for lab in space_a.labels if lab in space_b.labels]
    for lab in shared:
        if space_a.dim(lab) != space_b.dim(lab):
            raise ValueError(f"slot {lab} has different dimensions")
    ra = [lab for lab in space_a.labels if lab not in shared]
    rb = [lab for lab in space_b.labels if lab not in shared]
    L = iter("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")
    row = {lab: next(L) for lab in ra + rb}
    col = {lab: next(L) for lab in ra + rb}
    s1 = {lab: next(L) for lab in shared}
    s2 = {lab: next(L) for lab in shared}
    # partial transpose then trace: shared row indices of A and B coincide, as do columns
    sa = "".join(row[l] if l in ra else s1[l] for l in space_a.labels) + \
        "".join(col[l] if l in ra else s2[l] for l in space_a.labels)
    sb = "".join(row[l] if l in rb else s1[l] for l in space_b.labels) + \
        "".join(col[l] if l in rb else s2[l] for l in space_b.labels)
    out = "".join(row[l] for l in ra + rb) + "".join(col[l] for l in ra + rb)
    ta = np.asarray(a).reshape(space_a.dims + space_a.dims)
    tb = np.asarray(b).reshape(space_b.dims + space_b.dims)
    r = np.einsum(f"{sa},{sb}->{out}", ta, tb, optimize=True)
    res_space = TensorSpace(tuple((lab, space_a.dim(lab)) for lab in ra) +
                            tuple((lab, space_b.dim(lab)) for lab in rb))
    d = res_space.total_dim
    r = r.reshape(d, d)
    if order is not None:
        r = permute_slots(r, res_space, order)
        res_space = TensorSpace(tuple((lab, res_space.dim(lab)) for lab in order))
    return r, res_space


def _assemble(parties: Sequence[PartySpec], m: np.ndarray, space: TensorSpace) -> ProcessMatrix:
    """Tensor identities on missing party slots and reorder into party order."""
    full = []
    for p in parties:
        full += [(p.in_label, p.d_in), (p.out_label, p.d_out)]
    missing = [s for s in full if s[0] not in space.labels]
    extra = int(np.prod([d for _, d in missing])) if missing else 1
    big = np.kron(m, np.eye(extra))
    joint = TensorSpace(space.slots + tuple(missing))
    return ProcessMatrix(tuple(parties), permute_slots(big, joint, [s[0] for s in full]))


# ---------------------------------------------------------------------------
# circuit process matrices


def fixed_order_process(parties: Sequence[PartySpec], rng, memory: int = 2) -> ProcessMatrix:
    """Random circuit in which the parties act in the listed order.

    A random state feeds the first input plus a memory; random channels
    connect each output (with memory) to the next input; the last output is
    discarded.
    """
    parties = tuple(parties)
    mem = [f"m{k}" for k in range(len(parties))]
    first = parties[0]
    rho = random_density(first.d_in * memory, rng)
    cur, cur_space = rho, TensorSpace(((first.in_label, first.d_in), (mem[0], memory)))
    for k in range(len(parties) - 1):
        p, nxt = parties[k], parties[k + 1]
        last = k == len(parties) - 2
        d_mem_out = 1 if last else memory
        kraus = random_kraus(p.d_out * memory, nxt.d_in * d_mem_out, rng)
        c = choi(kraus)
        slots = ((p.out_label, p.d_out), (mem[k], memory), (nxt.in_label, nxt.d_in))
        if not last:
            slots += ((mem[k + 1], memory),)
        cur, cur_space = link_product(cur, cur_space, c, TensorSpace(slots))
    if len(parties) == 1:
        cur = permute_slots(cur, cur_space, [mem[0], first.in_label])
        cur = cur.reshape(memory, first.d_in, memory, first.d_in)
        cur = np.einsum("iaib->ab", cur)
        cur_space = TensorSpace(((first.in_label, first.d_in),))
    return _assemble(parties, cur, cur_space)


def channel_with_memory(a: PartySpec, b: PartySpec, rng, memory: int = 2) -> ProcessMatrix:
    """Random fixed-order bipartite process W^{A1 A2 B1} ⊗ I^{B2}."""
    return fixed_order_process((a, b), rng, memory)


def bipartite_separable(a: PartySpec, b: PartySpec, rng, q: float | None = None) -> ProcessMatrix:
    """q W_{A before B} + (1 - q) W_{B before A} from random channels with memory."""
    q = rng.uniform(0.1, 0.9) if q is None else q
    wab = channel_with_memory(a, b, rng)
    wba = channel_with_memory(b, a, rng)
    ba = _reorder(wba, (a, b))
    return ProcessMatrix((a, b), q * wab.matrix + (1 - q) * ba.matrix)


def _reorder(w: ProcessMatrix, parties: Sequence[PartySpec]) -> ProcessMatrix:
    order = [lab for p in parties for lab in (p.in_label, p.out_label)]
    return ProcessMatrix(tuple(parties), permute_slots(w.matrix, w.space, order))


def controlled_order_process(parties: Sequence[PartySpec], first: int, rng, memory: int = 2) -> ProcessMatrix:
    """Party ``first`` acts first; an instrument after it chooses which other party is second.

    This is the classically controlled circuit behind the fixed-first-party
    ECS form: each branch contributes I^{last output} ⊗ (positive operator).
    """
    parties = tuple(parties)
    f = parties[first]
    x, y = [p for k, p in enumerate(parties) if k != first]
    rho = random_density(f.d_in * memory, rng)
    head = TensorSpace(((f.in_label, f.d_in), ("m0", memory)))
    if x.d_in != y.d_in:
        raise ValueError("the two later parties need equal input dimensions")
    branches = random_instrument_kraus(f.d_out * memory, x.d_in * memory, 2, rng)
    total = 0
    for (second, last), kraus in zip(((x, y), (y, x)), branches):
        c1 = choi(kraus)
        s1 = TensorSpace(((f.out_label, f.d_out), ("m0", memory), (second.in_label, second.d_in), ("m1", memory)))
        cur, sp = link_product(rho, head, c1, s1)
        c2 = choi(random_kraus(second.d_out * memory, last.d_in, rng))
        s2 = TensorSpace(((second.out_label, second.d_out), ("m1", memory), (last.in_label, last.d_in)))
        cur, sp = link_product(cur, sp, c2, s2)
        total = total + _assemble(parties, cur, sp).matrix
    return ProcessMatrix(parties, total)


def tripartite_ecs_process(parties: Sequence[PartySpec], rng, weights=None) -> ProcessMatrix:
    """Random mixture over the first party of classically controlled circuits."""
    parties = tuple(parties)
    q = rng.dirichlet(np.ones(3)) if weights is None else np.asarray(weights, dtype=float)
    total = sum(qi * controlled_order_process(parties, k, rng).matrix for k, qi in enumerate(q) if qi > 0)
    return ProcessMatrix(parties, total)


# ---------------------------------------------------------------------------
# correlation tables


def _random_conditional(rng, shape_given: tuple[int, ...], n_out: int, deterministic: bool) -> np.ndarray:
    """Array [given..., o] of conditional distributions."""
    if deterministic:
        choice = rng.integers(0, n_out, size=shape_given)
        return np.eye(n_out)[choice]
    return rng.dirichlet(np.ones(n_out), size=shape_given)


def ordered_table(scenario: Scenario, order: Sequence[int], rng, deterministic: bool = False) -> ProbabilityTable:
    """Table of a fixed order: each party's outcome depends on its own and earlier settings and outcomes."""
    S, O = scenario.settings, scenario.outcomes
    p = np.zeros(scenario.shape)
    condit = {}
    for pos, k in enumerate(order):
        earlier = list(order[:pos])
        shape = tuple(S[e] for e in earlier) + tuple(O[e] for e in earlier) + (S[k],)
        condit[k] = (earlier, _random_conditional(rng, shape, O[k], deterministic))
    for s in itertools.product(*(range(x) for x in S)):
        for o in itertools.product(*(range(x) for x in O)):
            prob = 1.0
            for k in order:
                earlier, table = condit[k]
                idx = tuple(s[e] for e in earlier) + tuple(o[e] for e in earlier) + (s[k], o[k])
                prob *= table[idx]
            p[s + o] = prob
    return ProbabilityTable(scenario, p)


def random_causal_table(scenario: Scenario, rng, components: int = 3, deterministic: bool = False) -> ProbabilityTable:
    """Mixture of fixed-order tables with random orders (causal by construction)."""
    parts = []
    weights = rng.dirichlet(np.ones(components))
    for w in weights:
        order = list(rng.permutation(scenario.n))
        parts.append((float(w), ordered_table(scenario, order, rng, deterministic)))
    return mix_tables(parts)


def dynamical_order_table(rng, settings: int = 2, outcomes: int = 2, deterministic: bool = False) -> ProbabilityTable:
    """Charlie acts first; his setting and outcome decide whether Alice or Bob goes next.

    The rule mapping (s_C, o_C) to the order of Alice and Bob is random.
    """
    sc = Scenario(("A", "B", "C"), (settings,) * 3, (outcomes,) * 3)
    S, O = settings, outcomes
    pc = _random_conditional(rng, (S,), O, deterministic)  # [s_C, o_C]
    a_first = rng.integers(0, 2, size=(S, O)).astype(bool)
    # first of A/B: depends on (s_C, o_C, own setting); second: on everything before
    first_resp = _random_conditional(rng, (S, O, S), O, deterministic)
    second_resp = _random_conditional(rng, (S, O, S, O, S), O, deterministic)
    p = np.zeros(sc.shape)
    for sa, sb, scc, oa, ob, oc in itertools.product(range(S), range(S), range(S), range(O), range(O), range(O)):
        base = pc[scc, oc]
        if a_first[scc, oc]:
            val = first_resp[scc, oc, sa, oa] * second_resp[scc, oc, sa, oa, sb, ob]
        else:
            val = first_resp[scc, oc, sb, ob] * second_resp[scc, oc, sb, ob, sa, oa]
        p[sa, sb, scc, oa, ob, oc] = base * val
    return ProbabilityTable(sc, p)


def xor_relay_table() -> ProbabilityTable:
    """Bob's setting XOR Charlie's outcome is revealed to Alice; all outcomes otherwise uniform.

    o_B and o_C are uniform bits, o_A = s_B xor o_C, all settings binary. No
    single party signals to another, yet Bob signals to the pair {A, C}.
    """
    sc = Scenario(("A", "B", "C"), (2, 2, 2), (2, 2, 2))
    p = np.zeros(sc.shape)
    for sa, sb, scc, ob, oc in itertools.product(range(2), repeat=5):
        p[sa, sb, scc, sb ^ oc, ob, oc] = 0.25
    return ProbabilityTable(sc, p)


def random_table(scenario: Scenario, rng) -> ProbabilityTable:
    """Uniformly random conditional distributions (generally signaling both ways)."""
    k = int(np.prod(scenario.outcomes))
    rows = rng.dirichlet(np.ones(k), size=scenario.settings)
    return ProbabilityTable(scenario, rows.reshape(scenario.shape))


def identity_channel_table() -> ProbabilityTable:
    """Alice's setting bit arrives deterministically as Bob's outcome; Alice's outcome is 0."""
    sc = Scenario(("A", "B"), (2, 1), (1, 2))
    p = np.zeros(sc.shape)
    for sa in range(2):
        p[sa, 0, 0, sa] = 1.0
    return ProbabilityTable(sc, p)
