from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from causality_kit.correlations import ProbabilityTable, Scenario, mix_tables
from causality_kit.gallery import ocb_process
from causality_kit.generators import (dynamical_order_table, ordered_table, random_causal_table, random_table,
                                      xor_relay_table)
from causality_kit.oracles import hull_membership, one_way_vertices
from causality_kit.polytope import Game, causal_bound, causal_membership, check_witness, ocb_game, \
    optimize_quantum_value

S2222 = Scenario(("A", "B"), (2, 2), (2, 2))
seeds = st.integers(0, 2 ** 32 - 1)


def pr_box():
    p = np.zeros(S2222.shape)
    for x in range(2):
        for y in range(2):
            for a in range(2):
                p[x, y, a, a ^ (x & y)] = 0.5
    return ProbabilityTable(S2222, p)


def two_way_table():
    # A's outcome copies B's setting and B's outcome copies A's setting
    p = np.zeros(S2222.shape)
    for x in range(2):
        for y in range(2):
            p[x, y, y, x] = 1
    return ProbabilityTable(S2222, p)


def test_vertex_count():
    assert one_way_vertices(S2222).shape == (112, 16)


def test_causal_bound_exact():
    b = causal_bound(ocb_game(), exact=True)
    assert b.value == Fraction(3, 4)
    assert abs(causal_bound(ocb_game()).value - 0.75) < 1e-9


def test_ocb_violates_bound():
    q = optimize_quantum_value(ocb_process(), ocb_game(), seed=3)
    assert q.value == pytest.approx((2 + np.sqrt(2)) / 4, abs=1e-6)
    assert all(b >= a - 1e-12 for a, b in zip(q.history, q.history[1:]))


def test_pr_box_is_causal():
    # no-signaling boxes sit inside the causal polytope
    assert causal_membership(pr_box())
    assert hull_membership(pr_box())[0]


def test_two_way_signaling_is_not_causal():
    t = two_way_table()
    rep = causal_membership(t)
    assert rep.status == "infeasible" and rep.margin > 1e-6
    assert not hull_membership(t)[0]
    assert causal_membership(t, exact=True).status == "infeasible"


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_membership_matches_hull_oracle(seed):
    rng = np.random.default_rng(seed)
    kind = rng.integers(3)
    if kind == 0:
        t = random_causal_table(S2222, rng)
    elif kind == 1:
        t = random_table(S2222, rng)
    else:
        lam = rng.uniform()
        t = mix_tables([(lam, two_way_table()), (1 - lam, random_causal_table(S2222, rng))])
    assert bool(causal_membership(t)) == hull_membership(t)[0]


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_tripartite_dynamical_tables_are_causal(seed):
    t = dynamical_order_table(np.random.default_rng(seed))
    rep = causal_membership(t)
    assert rep.feasible
    assert check_witness(t, rep.blocks) == []


def test_tripartite_ordered_and_relay():
    rng = np.random.default_rng(5)
    sc = Scenario(("A", "B", "C"), (2, 2, 2), (2, 2, 2))
    assert causal_membership(ordered_table(sc, [2, 0, 1], rng))
    assert causal_membership(xor_relay_table())


def test_exact_membership_of_rational_table():
    rep = causal_membership(pr_box(), exact=True)
    assert rep.feasible and rep.exact
    total = sum(rep.blocks.values())
    assert all(Fraction(v) == Fraction(u).limit_denominator() for v, u in zip(total.reshape(-1),
                                                                             pr_box().p.reshape(-1)))


def test_witness_checker_flags_tampering():
    rep = causal_membership(random_causal_table(S2222, np.random.default_rng(0)))
    blocks = {k: v.copy() for k, v in rep.blocks.items()}
    key = next(iter(blocks))
    blocks[key][0, 0, 0, 0] += 0.1
    assert check_witness(random_causal_table(S2222, np.random.default_rng(0)), blocks)


def test_game_round_trip_and_validation():
    g = ocb_game()
    back = Game.from_dict(g.to_dict())
    assert back.scenario == g.scenario
    assert np.allclose(back.weights(), g.weights())
    with pytest.raises(ValueError):
        Game(S2222, np.zeros((2, 2)), np.full((2, 2), 0.25))
    with pytest.raises(ValueError):
        Game(S2222, np.zeros(S2222.shape), np.full((2, 2), 0.3))
