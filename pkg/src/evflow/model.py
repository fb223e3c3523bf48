"""Charging-network data model.

All quantities (battery, time, money) are exact rationals parsed from decimal
strings, so downstream battery arithmetic (level sets, augmented-graph node
identities) is exact. Floating point only appears if a caller explicitly asks
the LP layer for float mode.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction


class NetworkError(ValueError):
    """A network file or structure violates the model's invariants."""


def rational(value, where: str = "value") -> Fraction:
    """Parse an exact rational from a decimal string, 'p/q' string, or int.

    Floats are rejected: they usually mean the caller lost exactness upstream.
    """
    if isinstance(value, bool):
        raise NetworkError(f"{where}: expected a number, got a bool")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise NetworkError(f"{where}: not a rational number: {value!r}") from exc
    if isinstance(value, float):
        raise NetworkError(
            f"{where}: floats are not accepted; use a decimal string like \"{value}\""
        )
    raise NetworkError(f"{where}: expected a number, got {type(value).__name__}")


def rational_str(x: Fraction) -> str:
    """Canonical string for a rational: '7', '10.5'-free, always 'p' or 'p/q'."""
    return str(x)


@dataclass(frozen=True)
class Edge:
    """Directed edge: battery consumption d, travel time ell, optional capacity u."""

    tail: int
    head: int
    d: Fraction
    ell: Fraction
    u: Fraction | None = None


@dataclass(frozen=True)
class ChargingCurve:
    """Global battery-interval grid 0 = alpha_1 < ... < alpha_{J+1} = L."""

    thresholds: tuple[Fraction, ...]

    def __post_init__(self):
        a = self.thresholds
        if len(a) < 2:
            raise NetworkError("thresholds: need at least two values (0 and L)")
        if a[0] != 0:
            raise NetworkError(f"thresholds: first value must be 0, got {a[0]}")
        for j in range(len(a) - 1):
            if not a[j] < a[j + 1]:
                raise NetworkError(
                    f"thresholds: not strictly increasing at index {j} ({a[j]} >= {a[j+1]})"
                )

    @property
    def intervals(self) -> int:
        """Number of charging intervals J."""
        return len(self.thresholds) - 1

    @property
    def capacity(self) -> Fraction:
        return self.thresholds[-1]

    def lower(self, j: int) -> Fraction:
        """Interval bottom alpha_j (1-based j)."""
        return self.thresholds[j - 1]

    def upper(self, j: int) -> Fraction:
        """Interval top alpha_{j+1} (1-based j)."""
        return self.thresholds[j]

    def interval_of(self, b: Fraction) -> int:
        """1-based interval j with alpha_j <= b < alpha_{j+1}; b = L maps to J."""
        if not 0 <= b <= self.capacity:
            raise NetworkError(f"battery level {b} outside [0, {self.capacity}]")
        if b == self.capacity:
            return self.intervals
        lo, hi = 1, self.intervals
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.thresholds[mid - 1] <= b:
                lo = mid
            else:
                hi = mid - 1
        return lo


@dataclass(frozen=True)
class Station:
    """Chargers at one node: per-interval speeds/prices plus an occupancy price."""

    node: int
    chargers: int
    speeds: tuple[Fraction, ...]
    prices: tuple[Fraction, ...]
    occupancy_price: Fraction


@dataclass(frozen=True)
class OdPair:
    s: int
    t: int
    demand: Fraction = Fraction(0)


@dataclass(frozen=True)
class ChargingNetwork:
    """Validated, immutable charging network.

    Node identity is the dense index into `labels`; stations are keyed by node
    index and there is at most one station per node (multi-charger-type nodes
    are split during loading).
    """

    labels: tuple[str, ...]
    edges: tuple[Edge, ...]
    stations: dict[int, Station]
    curve: ChargingCurve
    od_pairs: tuple[OdPair, ...]
    _out: tuple[tuple[int, ...], ...] = field(repr=False, default=())
    _in: tuple[tuple[int, ...], ...] = field(repr=False, default=())

    def __post_init__(self):
        out = [[] for _ in self.labels]
        inc = [[] for _ in self.labels]
        for eid, e in enumerate(self.edges):
            out[e.tail].append(eid)
            inc[e.head].append(eid)
        object.__setattr__(self, "_out", tuple(tuple(v) for v in out))
        object.__setattr__(self, "_in", tuple(tuple(v) for v in inc))

    @property
    def capacity(self) -> Fraction:
        """Battery capacity L."""
        return self.curve.capacity

    @property
    def station_nodes(self) -> list[int]:
        return sorted(self.stations)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise NetworkError(f"unknown node label {label!r}") from None

    def out_edges(self, v: int) -> tuple[int, ...]:
        return self._out[v]

    def in_edges(self, v: int) -> tuple[int, ...]:
        return self._in[v]

    def speed(self, i: int, b: Fraction) -> Fraction:
        """Charging speed r_i(b) at station node i for battery level b."""
        st = self.stations[i]
        return st.speeds[self.curve.interval_of(b) - 1]

    def to_dict(self) -> dict:
        """Round-trippable plain-JSON form (numbers as exact strings)."""
        out = {
            "L": rational_str(self.capacity),
            "thresholds": [rational_str(a) for a in self.curve.thresholds],
            "nodes": list(self.labels),
            "edges": [],
            "stations": [],
            "od_pairs": [],
        }
        for e in self.edges:
            d = {
                "tail": self.labels[e.tail],
                "head": self.labels[e.head],
                "d": rational_str(e.d),
                "ell": rational_str(e.ell),
            }
            if e.u is not None:
                d["u"] = rational_str(e.u)
            out["edges"].append(d)
        for i in self.station_nodes:
            st = self.stations[i]
            out["stations"].append(
                {
                    "node": self.labels[i],
                    "chargers": st.chargers,
                    "speeds": [rational_str(r) for r in st.speeds],
                    "prices": [rational_str(t) for t in st.prices],
                    "occupancy_price": rational_str(st.occupancy_price),
                }
            )
        for od in self.od_pairs:
            out["od_pairs"].append(
                {
                    "s": self.labels[od.s],
                    "t": self.labels[od.t],
                    "demand": rational_str(od.demand),
                }
            )
        return out


def merge_threshold_grids(
    grids: list[tuple[tuple[Fraction, ...], tuple[Fraction, ...]]],
) -> tuple[tuple[Fraction, ...], list[tuple[Fraction, ...]]]:
    """Merge per-station threshold grids into one global grid.

    `grids` holds (thresholds, speeds) per station; every grid must span the
    same [0, L]. Returns the sorted union of thresholds and each station's
    speed vector re-expanded so it is constant on every global interval.
    Pointwise the function b -> r_i(b) is unchanged.
    """
    if not grids:
        raise NetworkError("merge_threshold_grids: no stations given")
    cap = grids[0][0][-1]
    merged: set[Fraction] = set()
    for idx, (thresholds, speeds) in enumerate(grids):
        if len(speeds) != len(thresholds) - 1:
            raise NetworkError(
                f"station grid {idx}: {len(speeds)} speeds for {len(thresholds) - 1} intervals"
            )
        if thresholds[0] != 0 or thresholds[-1] != cap:
            raise NetworkError(
                f"station grid {idx}: thresholds must span [0, {cap}], got "
                f"[{thresholds[0]}, {thresholds[-1]}]"
            )
        merged.update(thresholds)
    global_thresholds = tuple(sorted(merged))
    ChargingCurve(global_thresholds)  # validates monotonicity

    expanded = []
    for thresholds, speeds in grids:
        row = []
        for j in range(len(global_thresholds) - 1):
            lo = global_thresholds[j]
            # original interval containing [lo, next): station grids nest the
            # global grid, so lo sits inside exactly one original interval
            k = 0
            while thresholds[k + 1] <= lo:
                k += 1
            row.append(speeds[k])
        expanded.append(tuple(row))
    return global_thresholds, expanded


def _fresh_label(base: str, taken: set[str]) -> str:
    label = base + "'"
    while label in taken:
        label += "'"
    return label


def split_charger_types(raw: dict) -> dict:
    """Rewrite a raw network dict so no node carries more than one station entry.

    Each extra charger type at a node becomes a fresh node (label suffixed with
    primes) joined to the original by zero-d, zero-ell edges in both directions.
    Applying the rewrite twice is a fixpoint.
    """
    stations = raw.get("stations", [])
    seen: dict[str, int] = {}
    extra_nodes: list[str] = []
    extra_edges: list[dict] = []
    new_stations = []
    taken = set(raw.get("nodes", []))
    for entry in stations:
        node = entry.get("node")
        if node in seen:
            alias = _fresh_label(node, taken)
            taken.add(alias)
            extra_nodes.append(alias)
            extra_edges.append({"tail": node, "head": alias, "d": "0", "ell": "0"})
            extra_edges.append({"tail": alias, "head": node, "d": "0", "ell": "0"})
            entry = dict(entry)
            entry["node"] = alias
        else:
            seen[node] = 1
        new_stations.append(entry)
    if not extra_nodes:
        return raw
    out = dict(raw)
    out["nodes"] = list(raw.get("nodes", [])) + extra_nodes
    out["edges"] = list(raw.get("edges", [])) + extra_edges
    out["stations"] = new_stations
    return out


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise NetworkError(f"{where}: missing required key {key!r}")
    return obj[key]


def network_from_dict(raw: dict) -> ChargingNetwork:
    """Build and validate a ChargingNetwork from parsed JSON data."""
    if not isinstance(raw, dict):
        raise NetworkError("network: top level must be a JSON object")
    raw = split_charger_types(raw)

    cap = rational(_require(raw, "L", "network"), "L")
    thresholds = tuple(
        rational(a, f"thresholds[{j}]") for j, a in enumerate(_require(raw, "thresholds", "network"))
    )
    curve = ChargingCurve(thresholds)
    if curve.capacity != cap:
        raise NetworkError(f"thresholds: last value {curve.capacity} must equal L = {cap}")

    labels = _require(raw, "nodes", "network")
    if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
        raise NetworkError("nodes: expected an array of string labels")
    if len(set(labels)) != len(labels):
        dup = sorted({x for x in labels if labels.count(x) > 1})
        raise NetworkError(f"nodes: duplicate labels {dup}")
    index = {lab: i for i, lab in enumerate(labels)}

    def node_ref(lab, where):
        if lab not in index:
            raise NetworkError(f"{where}: unknown node {lab!r}")
        return index[lab]

    edges = []
    for n, e in enumerate(raw.get("edges", [])):
        where = f"edges[{n}]"
        tail = node_ref(_require(e, "tail", where), where + ".tail")
        head = node_ref(_require(e, "head", where), where + ".head")
        d = rational(_require(e, "d", where), where + ".d")
        ell = rational(_require(e, "ell", where), where + ".ell")
        if d < 0:
            raise NetworkError(f"{where}.d: negative battery consumption {d}")
        if ell < 0:
            raise NetworkError(f"{where}.ell: negative travel time {ell}")
        u = None
        if "u" in e and e["u"] is not None:
            u = rational(e["u"], where + ".u")
            if u < 0:
                raise NetworkError(f"{where}.u: negative capacity {u}")
        edges.append(Edge(tail, head, d, ell, u))

    stations: dict[int, Station] = {}
    for n, s in enumerate(raw.get("stations", [])):
        where = f"stations[{n}]"
        node = node_ref(_require(s, "node", where), where + ".node")
        if node in stations:
            raise NetworkError(f"{where}: node {labels[node]!r} already has a station")
        chargers = _require(s, "chargers", where)
        if not isinstance(chargers, int) or isinstance(chargers, bool) or chargers < 0:
            raise NetworkError(f"{where}.chargers: expected a non-negative integer")
        speeds = tuple(
            rational(r, f"{where}.speeds[{j}]") for j, r in enumerate(_require(s, "speeds", where))
        )
        prices = tuple(
            rational(t, f"{where}.prices[{j}]") for j, t in enumerate(_require(s, "prices", where))
        )
        if len(speeds) != curve.intervals:
            raise NetworkError(
                f"{where}.speeds: expected {curve.intervals} entries, got {len(speeds)}"
            )
        if len(prices) != curve.intervals:
            raise NetworkError(
                f"{where}.prices: expected {curve.intervals} entries, got {len(prices)}"
            )
        if any(r < 0 for r in speeds):
            raise NetworkError(f"{where}.speeds: negative charging speed")
        if any(t < 0 for t in prices):
            raise NetworkError(f"{where}.prices: negative price")
        rho = rational(_require(s, "occupancy_price", where), where + ".occupancy_price")
        if rho < 0:
            raise NetworkError(f"{where}.occupancy_price: negative price {rho}")
        stations[node] = Station(node, chargers, speeds, prices, rho)

    od_pairs = []
    for n, od in enumerate(raw.get("od_pairs", [])):
        where = f"od_pairs[{n}]"
        s = node_ref(_require(od, "s", where), where + ".s")
        t = node_ref(_require(od, "t", where), where + ".t")
        if s == t:
            raise NetworkError(f"{where}: origin and destination coincide ({labels[s]!r})")
        for v in (s, t):
            if v in stations:
                raise NetworkError(
                    f"{where}: node {labels[v]!r} is an origin/destination but carries a station"
                )
        demand = rational(od.get("demand", 0), where + ".demand")
        if demand < 0:
            raise NetworkError(f"{where}.demand: negative demand {demand}")
        od_pairs.append(OdPair(s, t, demand))

    return ChargingNetwork(
        labels=tuple(labels),
        edges=tuple(edges),
        stations=stations,
        curve=curve,
        od_pairs=tuple(od_pairs),
    )


def load_network(text: str | bytes) -> ChargingNetwork:
    """Parse a UTF-8 JSON network file (contents, not a path)."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkError(f"network: invalid JSON: {exc}") from exc
    return network_from_dict(raw)


def load_network_path(path) -> ChargingNetwork:
    with open(path, "rb") as fh:
        return load_network(fh.read())


def with_demands(net: ChargingNetwork, demands: list[Fraction]) -> ChargingNetwork:
    """Copy of the network with od-pair demands replaced."""
    if len(demands) != len(net.od_pairs):
        raise NetworkError(f"expected {len(net.od_pairs)} demands, got {len(demands)}")
    pairs = tuple(replace(od, demand=Fraction(D)) for od, D in zip(net.od_pairs, demands))
    return replace(net, od_pairs=pairs)


def with_chargers(net: ChargingNetwork, chargers: dict[int, int]) -> ChargingNetwork:
    """Copy of the network with selected stations' charger counts replaced."""
    stations = dict(net.stations)
    for node, a in chargers.items():
        if node not in stations:
            raise NetworkError(f"node index {node} has no station")
        stations[node] = replace(stations[node], chargers=a)
    return replace(net, stations=stations)
