import json
from fractions import Fraction

import pytest

from evflow.model import (
    ChargingCurve,
    NetworkError,
    load_network,
    merge_threshold_grids,
    network_from_dict,
    split_charger_types,
)

from conftest import example1_dict


def test_load_example1():
    net = load_network(json.dumps(example1_dict()))
    assert len(net.labels) == 4
    assert len(net.edges) == 5
    assert net.curve.intervals == 2
    assert net.capacity == 9
    assert net.stations[net.index("i1")].speeds == (Fraction(2), Fraction(1))


def test_non_monotone_thresholds_rejected():
    raw = example1_dict()
    raw["thresholds"] = ["0", "9", "5"]
    with pytest.raises(NetworkError, match="increasing"):
        network_from_dict(raw)


def test_station_at_od_node_rejected():
    raw = example1_dict()
    raw["stations"].append(
        {"node": "s", "chargers": 1, "speeds": ["1", "1"], "prices": ["0", "0"],
         "occupancy_price": "0"}
    )
    with pytest.raises(NetworkError, match="origin/destination"):
        network_from_dict(raw)


def test_dangling_edge_rejected():
    raw = example1_dict()
    raw["edges"].append({"tail": "i1", "head": "nowhere", "d": "1", "ell": "1"})
    with pytest.raises(NetworkError, match=r"edges\[5\].*nowhere"):
        network_from_dict(raw)


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda r: r.pop("L"), "missing required key 'L'"),
        (lambda r: r["edges"][0].pop("d"), r"edges\[0\]"),
        (lambda r: r["stations"][0].update(speeds=["2"]), "expected 2 entries"),
        (lambda r: r["stations"][0].update(chargers=-1), "non-negative"),
        (lambda r: r["edges"][0].update(d="-3"), "negative"),
        (lambda r: r["od_pairs"][0].update(t="s"), "coincide"),
        (lambda r: r["thresholds"].__setitem__(2, "8"), "must equal L"),
    ],
)
def test_schema_violations_carry_location(mutate, message):
    raw = example1_dict()
    mutate(raw)
    with pytest.raises(NetworkError, match=message):
        network_from_dict(raw)


def test_floats_rejected():
    raw = example1_dict()
    raw["L"] = 9.0
    with pytest.raises(NetworkError, match="float"):
        network_from_dict(raw)


def test_duplicate_labels_rejected():
    raw = example1_dict()
    raw["nodes"].append("i1")
    with pytest.raises(NetworkError, match="duplicate"):
        network_from_dict(raw)


def test_split_two_charger_types():
    raw = example1_dict()
    raw["stations"].append(
        {"node": "i1", "chargers": 2, "speeds": ["4", "4"], "prices": ["1", "1"],
         "occupancy_price": "0"}
    )
    net = network_from_dict(raw)
    assert "i1'" in net.labels
    alias = net.index("i1'")
    i1 = net.index("i1")
    zero_edges = [
        e for e in net.edges if {e.tail, e.head} == {i1, alias} and e.d == 0 and e.ell == 0
    ]
    assert len(zero_edges) == 2
    assert {e.tail for e in zero_edges} == {i1, alias}
    assert net.stations[alias].chargers == 2


def test_split_single_type_is_identity():
    raw = example1_dict()
    assert split_charger_types(raw) is raw


def test_split_three_types():
    raw = example1_dict()
    extra = {"node": "i2", "chargers": 1, "speeds": ["1", "1"], "prices": ["0", "0"],
             "occupancy_price": "0"}
    raw["stations"].extend([dict(extra), dict(extra)])
    out = split_charger_types(raw)
    assert len(out["nodes"]) == len(example1_dict()["nodes"]) + 2
    assert len(out["edges"]) == len(example1_dict()["edges"]) + 4
    # applying the rewrite again changes nothing
    again = split_charger_types(out)
    assert again is out


def test_merge_threshold_grids_example():
    F = Fraction
    grids = [
        ((F(0), F(5), F(9)), (F(2), F(1))),
        ((F(0), F(6), F(9)), (F(3), F(2))),
    ]
    thresholds, speeds = merge_threshold_grids(grids)
    assert thresholds == (0, 5, 6, 9)
    assert speeds[0] == (2, 1, 1)
    assert speeds[1] == (3, 3, 2)


def test_merge_single_station_identity():
    F = Fraction
    thresholds, speeds = merge_threshold_grids([((F(0), F(4), F(7)), (F(5), F(3)))])
    assert thresholds == (0, 4, 7)
    assert speeds == [(5, 3)]


def test_merge_identical_grids_idempotent():
    F = Fraction
    g = ((F(0), F(4), F(7)), (F(5), F(3)))
    thresholds, speeds = merge_threshold_grids([g, g])
    assert thresholds == (0, 4, 7)
    assert speeds == [(5, 3), (5, 3)]


def test_merge_preserves_pointwise_speed():
    import random

    F = Fraction
    rng = random.Random(7)
    for _ in range(25):
        L = rng.randint(6, 15)
        grids = []
        for _ in range(rng.randint(1, 4)):
            cuts = sorted(rng.sample(range(1, L), rng.randint(0, 3)))
            thresholds = tuple(F(x) for x in [0] + cuts + [L])
            speeds = tuple(F(rng.randint(0, 5)) for _ in range(len(thresholds) - 1))
            grids.append((thresholds, speeds))
        merged, expanded = merge_threshold_grids(grids)

        def value_at(thresholds, speeds, b):
            for j in range(len(speeds)):
                if thresholds[j] <= b < thresholds[j + 1]:
                    return speeds[j]
            return speeds[-1]

        for (orig_t, orig_s), new_s in zip(grids, expanded):
            for step in range(2 * L):
                b = F(step, 2)
                assert value_at(orig_t, orig_s, b) == value_at(merged, new_s, b)


def test_speed_lookup_uses_half_open_intervals(ex1_net):
    i1 = ex1_net.index("i1")
    assert ex1_net.speed(i1, Fraction(0)) == 2
    assert ex1_net.speed(i1, Fraction(4)) == 2
    assert ex1_net.speed(i1, Fraction(5)) == 1  # boundary belongs to the upper interval
    assert ex1_net.speed(i1, Fraction(9)) == 1


def test_curve_interval_of_bounds():
    curve = ChargingCurve((Fraction(0), Fraction(5), Fraction(9)))
    assert curve.interval_of(Fraction(0)) == 1
    assert curve.interval_of(Fraction(5)) == 2
    assert curve.interval_of(Fraction(9)) == 2
    with pytest.raises(NetworkError):
        curve.interval_of(Fraction(10))


def test_round_trip_to_dict(ex1_net):
    text = json.dumps(ex1_net.to_dict())
    again = load_network(text)
    assert again.to_dict() == ex1_net.to_dict()
