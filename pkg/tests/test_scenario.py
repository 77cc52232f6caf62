import numpy as np
import pytest
from hypothesis import given, strategies as st

from bellgate.errors import CapExceeded
from bellgate.scenario import (CorrelationTable, DeterministicStrategy, Outcome, Scenario,
                               enumerate_strategies, enumeration_cap, strategy_array,
                               strategy_from_index, strategy_point, strategy_points)

small = st.builds(Scenario, st.integers(2, 4), st.integers(1, 3), st.integers(1, 3))


def test_counts_and_shape():
    s = Scenario(3, 2, 3)
    assert s.n_strategies == 4**5
    assert s.table_shape == (2, 3, 4, 4)
    assert s.null == 3 and s.n_outcomes == 4


@pytest.mark.parametrize("bad", [(1, 2, 2), (2, 0, 2), (2, 2, 0)])
def test_invalid_scenario(bad):
    with pytest.raises(ValueError):
        Scenario(*bad)


def test_enumeration_order_is_lexicographic_last_fastest():
    s = Scenario(2, 1, 2)
    strategies = list(enumerate_strategies(s))
    assert strategies[0] == DeterministicStrategy((0,), (0, 0))
    assert strategies[1] == DeterministicStrategy((0,), (0, 1))
    assert strategies[3] == DeterministicStrategy((0,), (1, 0))
    assert strategies[-1] == DeterministicStrategy((2,), (2, 2))


@given(small, st.data())
def test_index_round_trip(s, data):
    idx = data.draw(st.integers(0, s.n_strategies - 1))
    strat = strategy_from_index(s, idx)
    assert strat.index(s) == idx
    assert tuple(strategy_array(s)[idx]) == strat.alice + strat.bob


@given(small, st.data())
def test_strategy_point_is_a_valid_table(s, data):
    strat = strategy_from_index(s, data.draw(st.integers(0, s.n_strategies - 1)))
    t = strategy_point(s, strat)
    t.check()
    assert t.p.sum() == s.na * s.nb


def test_strategy_points_match_single_points():
    s = Scenario(2, 2, 2)
    pts = strategy_points(s)
    for idx in (0, 17, s.n_strategies - 1):
        assert np.array_equal(pts[idx], strategy_point(s, strategy_from_index(s, idx)).flat)


def test_cap_env_override(monkeypatch):
    monkeypatch.setenv("BELLGATE_CAP", "10")
    assert enumeration_cap() == 10
    with pytest.raises(CapExceeded):
        next(enumerate_strategies(Scenario(2, 2, 2)))


def test_cap_argument():
    with pytest.raises(CapExceeded):
        strategy_array(Scenario(4, 3, 3), cap=100)


def test_table_checks():
    s = Scenario(2, 1, 1)
    good = np.zeros(s.table_shape)
    good[0, 0, 0, 0] = 1
    CorrelationTable(s, good).check()
    bad = good.copy()
    bad[0, 0, 0, 0] = 0.5
    with pytest.raises(ValueError):
        CorrelationTable(s, bad).check()
    with pytest.raises(ValueError):
        CorrelationTable(s, np.zeros((1, 1, 2, 2)))


def test_signalling_table_rejected():
    s = Scenario(2, 1, 2)
    p = np.zeros(s.table_shape)
    p[0, 0, 0, 0] = 1
    p[0, 1, 1, 0] = 1   # Alice's marginal depends on Bob's setting
    with pytest.raises(ValueError, match="signalling"):
        CorrelationTable(s, p).check()


def test_table_is_read_only_and_round_trips():
    s = Scenario(2, 1, 1)
    t = strategy_point(s, DeterministicStrategy((1,), (2,)))
    with pytest.raises(ValueError):
        t.p[0, 0, 0, 0] = 1
    back = CorrelationTable.from_dict(t.to_dict())
    assert back.scenario == s and np.array_equal(back.p, t.p)


def test_outcome():
    assert Outcome(1, 2).is_result()
    assert not Outcome(2, 2).is_result()
    assert str(Outcome(2, 2)) == "∅"
    with pytest.raises(ValueError):
        Outcome(3, 2)
