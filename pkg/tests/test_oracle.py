from fractions import Fraction

import pytest

from evflow.model import network_from_dict, with_chargers
from evflow.oracle import (
    UniverseOverflow,
    brute_flow,
    brute_single_opt,
    enumerate_strategies,
    oracle_cost,
)

from conftest import random_network

F = Fraction


def test_example1_universe_path_families(ex1_net):
    universe = enumerate_strategies(ex1_net, 0)
    families = {tuple(ex1_net.labels[v] for v in s.path) for s in universe.strategies}
    assert families == {("s", "i1", "t"), ("s", "i2", "t"), ("s", "i1", "i2", "t")}


def test_single_path_no_station():
    raw = {
        "L": "7",
        "thresholds": ["0", "7"],
        "nodes": ["s", "t"],
        "edges": [{"tail": "s", "head": "t", "d": "7", "ell": "7"}],
        "stations": [],
        "od_pairs": [{"s": "s", "t": "t"}],
    }
    net = network_from_dict(raw)
    universe = enumerate_strategies(net, 0)
    assert len(universe.strategies) == 1
    assert universe.strategies[0].charge_total == 0


def test_disconnected_universe_empty():
    raw = {
        "L": "7",
        "thresholds": ["0", "7"],
        "nodes": ["s", "t", "x"],
        "edges": [{"tail": "s", "head": "x", "d": "1", "ell": "1"}],
        "stations": [],
        "od_pairs": [{"s": "s", "t": "t"}],
    }
    net = network_from_dict(raw)
    universe = enumerate_strategies(net, 0)
    assert universe.strategies == ()
    with pytest.raises(ValueError, match="no feasible"):
        brute_single_opt(net, universe)


def test_brute_single_opt_example1(ex1_net):
    cost, strategy = brute_single_opt(ex1_net, enumerate_strategies(ex1_net, 0))
    assert cost == F(21, 2)
    assert strategy.charge_total == 1


def test_brute_single_tie_keeps_first():
    # two disjoint but identical routes: first enumerated wins
    raw = {
        "L": "5",
        "thresholds": ["0", "5"],
        "nodes": ["s", "a", "b", "t"],
        "edges": [
            {"tail": "s", "head": "a", "d": "3", "ell": "3"},
            {"tail": "a", "head": "t", "d": "3", "ell": "3"},
            {"tail": "s", "head": "b", "d": "3", "ell": "3"},
            {"tail": "b", "head": "t", "d": "3", "ell": "3"},
        ],
        "stations": [
            {"node": "a", "chargers": 1, "speeds": ["1"], "prices": ["0"],
             "occupancy_price": "0"},
            {"node": "b", "chargers": 1, "speeds": ["1"], "prices": ["0"],
             "occupancy_price": "0"},
        ],
        "od_pairs": [{"s": "s", "t": "t"}],
    }
    net = network_from_dict(raw)
    cost, strategy = brute_single_opt(net, enumerate_strategies(net, 0))
    assert cost == 7  # 6 drive + charge 1 at speed 1
    assert net.labels[strategy.path[1]] == "a"


def test_oracle_cost_rejects_infeasible(ex1_net):
    from evflow.routing import ChargingStrategy

    bad = ChargingStrategy(0, (0, 1, 3), (F(0), F(8), F(0)), (0, 3))
    assert oracle_cost(ex1_net, bad) is None


def test_universe_overflow_signals():
    net = random_network(1)
    with pytest.raises(UniverseOverflow):
        enumerate_strategies(net, 0, max_count=0)


def test_brute_flow_example1(ex1_net):
    assert brute_flow(ex1_net, {0: enumerate_strategies(ex1_net, 0)}) == 4


def test_brute_flow_zero_chargers(ex1_net):
    net = with_chargers(ex1_net, {ex1_net.index("i1"): 0, ex1_net.index("i2"): 0})
    assert brute_flow(net, {0: enumerate_strategies(net, 0)}) == 0


def test_brute_flow_homogeneous_in_chargers(ex1_net):
    net = with_chargers(ex1_net, {ex1_net.index("i1"): 2, ex1_net.index("i2"): 2})
    assert brute_flow(net, {0: enumerate_strategies(net, 0)}) == 8


def test_fine_grid_agrees_with_extreme_enumeration():
    """No charge vector off the extreme pattern beats the pattern's optimum."""
    checked = 0
    for seed in range(30):
        net = random_network(seed, max_stations=2)
        coarse = enumerate_strategies(net, 0)
        fine = enumerate_strategies(net, 0, fine_grid=True, max_count=500_000)
        def best(universe):
            try:
                return brute_single_opt(net, universe)[0]
            except ValueError:
                return None
        b1, b2 = best(coarse), best(fine)
        assert b1 == b2
        if b1 is not None:
            checked += 1
    assert checked >= 10
