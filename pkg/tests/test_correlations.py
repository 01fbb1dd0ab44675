import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from causality_kit.correlations import (CausalConfiguration, ProbabilityTable, ReducedProcessUndefined, Scenario,
                                        compose, conditional_process, fixed_order_causal_check, mix_tables,
                                        no_signaling_subset, reduced_process)
from causality_kit.generators import (dynamical_order_table, identity_channel_table, ordered_table,
                                      random_causal_table, random_table, xor_relay_table)
from causality_kit.oracles import brute_force_fixed_order, iter_configurations

ABC = Scenario(("A", "B", "C"), (2, 2, 2), (2, 2, 2))
seeds = st.integers(0, 2 ** 32 - 1)


def test_scenario_validation():
    with pytest.raises(ValueError):
        Scenario(("A", "A"), (2, 2), (2, 2))
    with pytest.raises(ValueError):
        Scenario(("A",), (0,), (2,))
    assert ABC.shape == (2,) * 6
    assert ABC.restrict(["C", "A"]).parties == ("A", "C")


def test_table_validation():
    sc = Scenario(("A",), (1,), (2,))
    with pytest.raises(ValueError):
        ProbabilityTable(sc, np.array([[0.5, 0.6]]))
    with pytest.raises(ValueError):
        ProbabilityTable(sc, np.array([[1.5, -0.5]]))


def test_identity_channel_signals():
    t = identity_channel_table()
    assert not no_signaling_subset(t, ["A"])[0]
    assert no_signaling_subset(t, ["B"])[0]
    assert fixed_order_causal_check(t, CausalConfiguration.parse("AB", ["A<B"]))
    assert not fixed_order_causal_check(t, CausalConfiguration.parse("AB", ["B<A"]))
    assert not fixed_order_causal_check(t, CausalConfiguration.parse("AB", ["A||B"]))


def test_xor_relay_needs_subsets():
    t = xor_relay_table()
    for x, y in itertools.permutations("ABC", 2):
        assert no_signaling_subset(t, [x], [y])[0]
    assert not no_signaling_subset(t, ["B"], ["A", "C"])[0]


def test_configuration_validation():
    with pytest.raises(ValueError):
        CausalConfiguration.parse("ABC", ["A<B", "B<C"])  # not closed
    with pytest.raises(ValueError):
        CausalConfiguration.parse("AB", ["A<B", "B<A"])
    with pytest.raises(ValueError):
        CausalConfiguration.parse("AB", ["A<A"])
    assert len(list(iter_configurations("ABC"))) == 19


@settings(max_examples=20, deadline=None)
@given(seeds, st.permutations([0, 1, 2]))
def test_ordered_table_compatible(seed, order):
    t = ordered_table(ABC, order, np.random.default_rng(seed))
    names = [ABC.parties[k] for k in order]
    cfg = CausalConfiguration(ABC.parties, frozenset(itertools.combinations(names, 2)))
    assert fixed_order_causal_check(t, cfg)


@settings(max_examples=10, deadline=None)
@given(seeds, st.booleans())
def test_fixed_order_matches_brute_force(seed, deterministic):
    rng = np.random.default_rng(seed)
    t = dynamical_order_table(rng, deterministic=deterministic)
    for cfg in iter_configurations("ABC"):
        assert bool(fixed_order_causal_check(t, cfg, 1e-9)) == brute_force_fixed_order(t, cfg, 1e-9)


def test_fixed_order_brute_force_on_xor_relay():
    t = xor_relay_table()
    for cfg in iter_configurations("ABC"):
        assert bool(fixed_order_causal_check(t, cfg, 1e-9)) == brute_force_fixed_order(t, cfg, 1e-9)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_recomposition(seed):
    rng = np.random.default_rng(seed)
    t = dynamical_order_table(rng)
    cond, red = conditional_process(t, ["C"])
    assert red.scenario.parties == ("C",)
    assert np.max(np.abs(compose(cond, red).p - t.p)) <= 1e-12


def test_reduced_process_undefined():
    with pytest.raises(ReducedProcessUndefined):
        reduced_process(identity_channel_table(), ["B"])
    red = reduced_process(identity_channel_table(), ["A"])
    assert red.p.shape == (2, 1)


def test_mix_tables(rng):
    a, b = random_table(ABC, rng), random_table(ABC, rng)
    m = mix_tables([(0.25, a), (0.75, b)])
    assert np.allclose(m.p, 0.25 * a.p + 0.75 * b.p)
    with pytest.raises(ValueError):
        mix_tables([(0.5, a), (0.6, b)])


def test_json_round_trip(rng):
    t = random_causal_table(ABC, rng)
    back = ProbabilityTable.from_dict(t.to_dict())
    assert back.scenario == t.scenario and np.allclose(back.p, t.p)
