from fractions import Fraction

import pytest

from evflow.augment import EdgeKind
from evflow.flows import (
    AssumptionViolated,
    InfeasibleDemand,
    UnboundedFlow,
    build_maxflow_lp,
    build_mincost_lp,
    decompose_flow,
    solve_maxflow,
    solve_mincost,
    verify_flow,
)
from evflow.model import network_from_dict, with_chargers, with_demands
from conftest import pipeline, random_network

F = Fraction


def test_example1_maxflow_value_and_duality(ex1_net, ex1_graph):
    sol = solve_maxflow(ex1_graph)
    assert sol.objective == 4
    dual_value = sum(ex1_net.stations[i].chargers * sol.y[i] for i in ex1_net.stations)
    assert dual_value == 4  # strong duality, exactly
    assert sum(x for _, x in sol.strategies) == 4
    assert verify_flow(ex1_net, sol.strategies).ok
    # allocation rows hold exactly
    for i in ex1_net.stations:
        total = sum(sol.z[(i, j)] for j in range(1, ex1_net.curve.intervals + 1))
        assert total == ex1_net.stations[i].chargers
    # capacity duals are nonnegative and dual-feasible against allocations
    for (i, j), pi in sol.pi.items():
        assert pi >= 0
        r = ex1_net.stations[i].speeds[j - 1]
        assert sol.y[i] >= pi * r


def test_maxflow_zero_without_reachable_strategy():
    raw = {
        "L": "5",
        "thresholds": ["0", "5"],
        "nodes": ["s", "t"],
        "edges": [{"tail": "s", "head": "t", "d": "6", "ell": "6"}],
        "stations": [],
        "od_pairs": [{"s": "s", "t": "t"}],
    }
    net = network_from_dict(raw)
    _, _, _, graph = pipeline(net)
    assert solve_maxflow(graph).objective == 0


def test_single_copy_capacity_bound():
    # one station, charge 1 unit per vehicle at speed 2 with one charger: flow 2
    raw = {
        "L": "2",
        "thresholds": ["0", "2"],
        "nodes": ["s", "a", "t"],
        "edges": [
            {"tail": "s", "head": "a", "d": "1", "ell": "1"},
            {"tail": "a", "head": "t", "d": "2", "ell": "2"},
        ],
        "stations": [
            {"node": "a", "chargers": 1, "speeds": ["2"], "prices": ["0"],
             "occupancy_price": "0"}
        ],
        "od_pairs": [{"s": "s", "t": "t"}],
    }
    net = network_from_dict(raw)
    _, _, _, graph = pipeline(net)
    assert solve_maxflow(graph).objective == 2


def test_maxflow_refuses_unbounded():
    raw = {
        "L": "5",
        "thresholds": ["0", "5"],
        "nodes": ["s", "t"],
        "edges": [{"tail": "s", "head": "t", "d": "5", "ell": "5"}],
        "stations": [],
        "od_pairs": [{"s": "s", "t": "t"}],
    }
    net = network_from_dict(raw)
    _, _, _, graph = pipeline(net)
    with pytest.raises(UnboundedFlow):
        build_maxflow_lp(graph)
    with pytest.raises(UnboundedFlow):
        solve_maxflow(graph)


def test_mincost_zero_demand(ex1_net):
    net = with_demands(ex1_net, [F(0)])
    _, _, _, graph = pipeline(net)
    sol = solve_mincost(graph)
    assert sol.objective == 0
    assert sol.strategies == []


def test_mincost_small_demand_routes_on_single_ev_optimum(ex1_net):
    net = with_demands(ex1_net, [F(1, 100)])
    _, _, _, graph = pipeline(net)
    sol = solve_mincost(graph)
    assert sol.objective == F(21, 2) * F(1, 100)


def test_mincost_demand_above_capacity_infeasible(ex1_net):
    net = with_demands(ex1_net, [F(5)])  # max flow is 4
    _, _, _, graph = pipeline(net)
    with pytest.raises(InfeasibleDemand):
        solve_mincost(graph)


def test_mincost_gated_on_assumption():
    raw = {
        "L": "10",
        "thresholds": ["0", "10"],
        "nodes": ["s", "a", "b", "t"],
        "edges": [
            {"tail": "s", "head": "a", "d": "3", "ell": "7"},
            {"tail": "s", "head": "a", "d": "4", "ell": "2"},
            {"tail": "a", "head": "b", "d": "8", "ell": "8"},
            {"tail": "b", "head": "t", "d": "8", "ell": "8"},
        ],
        "stations": [
            {"node": "a", "chargers": 1, "speeds": ["2"], "prices": ["0"],
             "occupancy_price": "0"},
            {"node": "b", "chargers": 1, "speeds": ["2"], "prices": ["0"],
             "occupancy_price": "0"},
        ],
        "od_pairs": [{"s": "s", "t": "t", "demand": "1"}],
    }
    net = network_from_dict(raw)
    _, _, _, graph = pipeline(net)
    with pytest.raises(AssumptionViolated, match="diverge"):
        build_mincost_lp(graph)
    # max flow stays available on the same instance
    assert solve_maxflow(graph).objective >= 0


def test_decompose_single_saturated_path():
    raw = {
        "L": "2",
        "thresholds": ["0", "2"],
        "nodes": ["s", "a", "t"],
        "edges": [
            {"tail": "s", "head": "a", "d": "1", "ell": "1"},
            {"tail": "a", "head": "t", "d": "2", "ell": "2"},
        ],
        "stations": [
            {"node": "a", "chargers": 1, "speeds": ["1"], "prices": ["0"],
             "occupancy_price": "0"}
        ],
        "od_pairs": [{"s": "s", "t": "t"}],
    }
    net = network_from_dict(raw)
    sol = solve_maxflow(pipeline(net)[3])
    assert sol.objective == 1
    assert len(sol.strategies) == 1
    assert sol.strategies[0][1] == 1


def test_decompose_two_disjoint_unit_paths():
    raw = {
        "L": "2",
        "thresholds": ["0", "2"],
        "nodes": ["s", "a", "b", "t"],
        "edges": [
            {"tail": "s", "head": "a", "d": "1", "ell": "1"},
            {"tail": "a", "head": "t", "d": "2", "ell": "2"},
            {"tail": "s", "head": "b", "d": "1", "ell": "1"},
            {"tail": "b", "head": "t", "d": "2", "ell": "2"},
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
    sol = solve_maxflow(pipeline(net)[3])
    assert sol.objective == 2
    assert sorted(x for _, x in sol.strategies) == [1, 1]
    middles = {net.labels[s.path[1]] for s, _ in sol.strategies}
    assert middles == {"a", "b"}
    assert sol.dropped_cycles == 0


def test_decompose_drops_zero_cost_cycle(ex1_graph):
    # hand-build a flow: optimal solution plus a charge/chain cycle is not
    # conservation-feasible in this graph (charge edges only go up), so build
    # a synthetic two-edge cycle on a copy pair via travel edges instead.
    graph = ex1_graph
    # find a genuine source->sink path to overlay
    from evflow.flows import _usable_edges

    eids = _usable_edges(graph, 0)
    flow = {}
    # route one unit along the cheapest source path found by decomposition of
    # the LP solution, then superpose a cycle if one exists in the graph
    sol = solve_maxflow(graph)
    for (k, eid), v in sol.edge_flow.items():
        flow[(k, eid)] = v
    strategies, dropped = decompose_flow(graph, flow)
    assert dropped == 0
    assert sum(x for _, x in strategies) == sol.objective


def test_decompose_cycle_dropped_synthetic():
    # a network where the augmented graph has a directed cycle between two
    # stations within range of each other
    raw = {
        "L": "10",
        "thresholds": ["0", "10"],
        "nodes": ["s", "a", "b", "t"],
        "edges": [
            {"tail": "s", "head": "a", "d": "6", "ell": "6"},
            {"tail": "a", "head": "b", "d": "5", "ell": "5"},
            {"tail": "b", "head": "a", "d": "5", "ell": "5"},
            {"tail": "b", "head": "t", "d": "6", "ell": "6"},
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
    _, _, _, graph = pipeline(net)
    sol = solve_maxflow(graph)
    # overlay one unit around a charge/travel loop: charge a 0->5, drive to b
    # arriving empty, charge b 0->5, drive back to a arriving empty
    a, b = net.index("a"), net.index("b")

    def eid(pred):
        return next(n for n, e in enumerate(graph.edges) if pred(e))

    cycle = [
        eid(lambda e: e.kind is EdgeKind.CHARGE and e.tail == ("copy", a, 1, F(0))),
        eid(lambda e: e.kind is EdgeKind.CHARGE and e.tail == ("copy", a, 1, F(4))),
        eid(lambda e: e.kind is EdgeKind.TRAVEL
            and e.tail == ("copy", a, 1, F(5)) and e.head == ("copy", b, 1, F(0))),
        eid(lambda e: e.kind is EdgeKind.CHARGE and e.tail == ("copy", b, 1, F(0))),
        eid(lambda e: e.kind is EdgeKind.TRAVEL
            and e.tail == ("copy", b, 1, F(5)) and e.head == ("copy", a, 1, F(0))),
    ]
    flow = dict(sol.edge_flow)
    for e in cycle:
        flow[(0, e)] = flow.get((0, e), F(0)) + 1
    strategies, dropped = decompose_flow(graph, flow)
    assert dropped >= 1
    assert sum(x for _, x in strategies) == sol.objective


def test_verify_flow_detects_doubling(ex1_net, ex1_graph):
    sol = solve_maxflow(ex1_graph)
    doubled = [(s, 2 * x) for s, x in sol.strategies]
    report = verify_flow(ex1_net, doubled)
    assert not report.ok
    assert len([s for s in report.stations if s.violations]) == 2


def test_verify_flow_empty_has_full_slack(ex1_net):
    report = verify_flow(ex1_net, [])
    assert report.ok
    for i in ex1_net.stations:
        assert report.slack(i) == ex1_net.stations[i].chargers


def test_homogeneity_exact(ex1_net):
    base = solve_maxflow(pipeline(ex1_net)[3]).objective
    for t in (2, 3, 7):
        net = with_chargers(ex1_net, {i: t * ex1_net.stations[i].chargers
                                      for i in ex1_net.stations})
        assert solve_maxflow(pipeline(net)[3]).objective == t * base


def test_float_mode_close_to_exact(ex1_graph):
    exact = solve_maxflow(ex1_graph, mode="exact")
    approx = solve_maxflow(ex1_graph, mode="float")
    assert abs(approx.objective - float(exact.objective)) < 1e-9


def test_lp_text_emission_for_flows(ex1_graph):
    lp = build_maxflow_lp(ex1_graph)
    text = lp.to_lp_text()
    assert "Maximize" in text and "Subject To" in text and "z_" in text


def test_scaling_property_random():
    for seed in range(10):
        net = random_network(seed + 300)
        base = solve_maxflow(pipeline(net)[3]).objective
        net2 = with_chargers(net, {i: 5 * net.stations[i].chargers for i in net.stations})
        assert solve_maxflow(pipeline(net2)[3]).objective == 5 * base


def test_maxflow_lp_shape_on_example1(ex1_graph):
    lp = build_maxflow_lp(ex1_graph)
    z_vars = [v for v in lp.variables if v.startswith("z_")]
    assert len(z_vars) == 4  # one per station copy
    cap_rows = [c for c in lp.constraints if c.name.startswith("cap_")]
    alloc_rows = [c for c in lp.constraints if c.name.startswith("alloc_")]
    cons_rows = [c for c in lp.constraints if c.name.startswith("cons0_")]
    assert len(cap_rows) == 4
    assert len(alloc_rows) == 2
    assert len(cons_rows) == 12  # every interior copy node of the one commodity


def test_decomposed_strategies_follow_level_sets():
    from evflow.routing import battery_trace

    for seed in range(15):
        net = random_network(seed + 4000)
        _, _, sets, graph = pipeline(net)
        sol = solve_maxflow(graph)
        for strategy, _ in sol.strategies:
            trace = battery_trace(net, strategy)
            for pos, v in enumerate(strategy.path):
                arrival, departure = trace[pos]
                if strategy.charges[pos] == 0 or v not in net.stations:
                    continue
                j_in = net.curve.interval_of(arrival)
                levels_in = sets.levels((v, j_in))
                assert arrival in levels_in


def test_split_charger_types_doubles_capacity_end_to_end():
    # one node with two charger types behaves like two coupled stations
    base = {
        "L": "2",
        "thresholds": ["0", "2"],
        "nodes": ["s", "a", "t"],
        "edges": [
            {"tail": "s", "head": "a", "d": "1", "ell": "1"},
            {"tail": "a", "head": "t", "d": "2", "ell": "2"},
        ],
        "stations": [
            {"node": "a", "chargers": 1, "speeds": ["2"], "prices": ["0"],
             "occupancy_price": "0"}
        ],
        "od_pairs": [{"s": "s", "t": "t"}],
    }
    single = network_from_dict(base)
    assert solve_maxflow(pipeline(single)[3]).objective == 2

    base["stations"].append(
        {"node": "a", "chargers": 1, "speeds": ["2"], "prices": ["0"],
         "occupancy_price": "0"}
    )
    doubled = network_from_dict(base)
    assert "a'" in doubled.labels
    sol = solve_maxflow(pipeline(doubled)[3])
    assert sol.objective == 4
    assert verify_flow(doubled, sol.strategies).ok


def test_mincost_matches_scaled_route_cost_random():
    from evflow.augment import InfeasibleOdPair
    from evflow.flows import InfeasibleDemand
    from evflow.model import with_chargers, with_demands
    from evflow.routing import route_single, strategy_cost

    for seed in range(12):
        net = random_network(seed + 900)
        net = with_chargers(net, {i: 10_000 for i in net.stations})
        net = with_demands(net, [F(5)] * len(net.od_pairs))
        graph = pipeline(net)[3]
        try:
            unit = strategy_cost(net, route_single(graph, 0))
        except InfeasibleOdPair:
            unit = None
        try:
            total = solve_mincost(graph).objective
        except InfeasibleDemand:
            total = None
        if unit is None:
            assert total is None
        else:
            assert total == 5 * unit


def test_two_commodity_instances_match_brute():
    from evflow.oracle import brute_flow, enumerate_strategies

    checked = 0
    for seed in range(12):
        net = random_network(seed + 6000, two_pairs=True)
        if len(net.od_pairs) < 2:
            continue
        graph = pipeline(net)[3]
        lp_value = solve_maxflow(graph).objective
        universes = {k: enumerate_strategies(net, k) for k in range(len(net.od_pairs))}
        assert lp_value == brute_flow(net, universes)
        checked += 1
    assert checked >= 4


def test_float_mode_tracks_exact_on_random_instances():
    for seed in range(25):
        net = random_network(seed + 8000)
        graph = pipeline(net)[3]
        exact = solve_maxflow(graph, mode="exact").objective
        approx = solve_maxflow(graph, mode="float").objective
        assert abs(approx - float(exact)) < 1e-7


def test_three_commodity_distinct_terminals_matches_brute():
    from evflow.oracle import brute_flow, enumerate_strategies

    raw = {
        "L": "4",
        "thresholds": ["0", "2", "4"],
        "nodes": ["s1", "s2", "a", "t1", "t2"],
        "edges": [
            {"tail": "s1", "head": "a", "d": "3", "ell": "3"},
            {"tail": "s2", "head": "a", "d": "4", "ell": "4"},
            {"tail": "a", "head": "t1", "d": "4", "ell": "4"},
            {"tail": "a", "head": "t2", "d": "3", "ell": "3"},
        ],
        "stations": [
            {"node": "a", "chargers": 2, "speeds": ["2", "1"], "prices": ["1", "2"],
             "occupancy_price": "1"}
        ],
        "od_pairs": [
            {"s": "s1", "t": "t1", "demand": "1"},
            {"s": "s2", "t": "t2", "demand": "1"},
            {"s": "s1", "t": "t2", "demand": "0"},
        ],
    }
    net = network_from_dict(raw)
    sol = solve_maxflow(pipeline(net)[3])
    universes = {k: enumerate_strategies(net, k) for k in range(3)}
    assert sol.objective == brute_flow(net, universes) == F(4, 3)
    assert verify_flow(net, sol.strategies).ok
