"""Battery-level sets and the charge-augmented graph.

Nodes are (station copy, battery level) pairs over the finite arrival and
departure level sets, plus one source/sink per od pair. Edges come in three
kinds: charging steps between consecutive levels inside one copy, zero-weight
chain edges between consecutive copies of one station at the shared boundary,
and travel edges that consume battery exactly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

from .closure import AuxiliaryNetwork, MetricClosure
from .model import ChargingNetwork


class EdgeKind(str, enum.Enum):
    CHARGE = "charge"  # red in figures: gains lam battery inside one copy
    CHAIN = "chain"    # gray: crosses an interval boundary at the same station
    TRAVEL = "travel"  # black: moves between stations / terminals, spends d


@dataclass(frozen=True)
class BatteryLevelSets:
    """Per copy (i, j): possible arrival (b_in) and departure (b_out) levels."""

    b_in: dict[tuple[int, int], tuple[Fraction, ...]]
    b_out: dict[tuple[int, int], tuple[Fraction, ...]]

    def levels(self, copy: tuple[int, int]) -> tuple[Fraction, ...]:
        return tuple(sorted(set(self.b_in[copy]) | set(self.b_out[copy])))


def compute_level_sets(aux: AuxiliaryNetwork) -> BatteryLevelSets:
    """Arrival/departure battery levels per copy.

    Arrivals: the copy's lower bound, plus every "left the in-neighbor full"
    value that lands inside the copy's interval (origins count as in-neighbors
    departing at L). Departures: the copy's upper bound, plus every "charge
    just enough to enter the out-neighbor at its lower bound" value
    (destinations count as out-neighbors entered at 0).
    """
    net = aux.net
    cap = net.capacity
    b_in: dict[tuple[int, int], set[Fraction]] = {}
    b_out: dict[tuple[int, int], set[Fraction]] = {}
    for node in aux.copy_nodes():
        _, i, j = node
        lo, hi = aux.bounds(node)
        b_in[(i, j)] = {lo}
        b_out[(i, j)] = {hi}

    for e in aux.edges:
        if e.head[0] == "copy":
            _, i, j = e.head
            lo, hi = aux.bounds(e.head)
            if e.tail[0] == "copy":
                departed_full = aux.bounds(e.tail)[1] - e.d
            else:  # origin departs with a full battery
                departed_full = cap - e.d
            if lo <= departed_full <= hi:
                b_in[(i, j)].add(departed_full)
        if e.tail[0] == "copy":
            _, i, j = e.tail
            lo, hi = aux.bounds(e.tail)
            if e.head[0] == "copy":
                just_reach = aux.bounds(e.head)[0] + e.d
            else:  # destination is entered with an empty battery
                just_reach = e.d
            if lo <= just_reach <= hi:
                b_out[(i, j)].add(just_reach)

    return BatteryLevelSets(
        b_in={c: tuple(sorted(v)) for c, v in b_in.items()},
        b_out={c: tuple(sorted(v)) for c, v in b_out.items()},
    )


# Augmented node keys: ("copy", i, j, b) | ("src", k) | ("dst", k)
AugNode = tuple


@dataclass(frozen=True)
class AugEdge:
    tail: AugNode
    head: AugNode
    kind: EdgeKind
    lam: Fraction          # battery gained (charge edges only)
    gamma: Fraction        # per-unit-flow cost
    d: Fraction            # battery spent (travel edges only)
    ell: Fraction          # travel time
    copy: tuple[int, int] | None  # owning copy for capacity grouping (charge)
    phys: tuple[int, int] | None  # original-network endpoints (travel)


@dataclass(frozen=True)
class AugmentedGraph:
    aux: AuxiliaryNetwork
    sets: BatteryLevelSets
    nodes: tuple[AugNode, ...]
    edges: tuple[AugEdge, ...]
    _out: dict = field(repr=False, default_factory=dict)
    _in: dict = field(repr=False, default_factory=dict)

    def __post_init__(self):
        out: dict[AugNode, list[int]] = {n: [] for n in self.nodes}
        inc: dict[AugNode, list[int]] = {n: [] for n in self.nodes}
        for eid, e in enumerate(self.edges):
            out[e.tail].append(eid)
            inc[e.head].append(eid)
        object.__setattr__(self, "_out", out)
        object.__setattr__(self, "_in", inc)

    @property
    def net(self) -> ChargingNetwork:
        return self.aux.net

    def out_edges(self, node: AugNode) -> list[int]:
        return self._out[node]

    def in_edges(self, node: AugNode) -> list[int]:
        return self._in[node]

    def source(self, k: int) -> AugNode:
        return ("src", k)

    def sink(self, k: int) -> AugNode:
        return ("dst", k)

    def charge_edges_by_copy(self) -> dict[tuple[int, int], list[int]]:
        groups: dict[tuple[int, int], list[int]] = {}
        for eid, e in enumerate(self.edges):
            if e.kind is EdgeKind.CHARGE:
                groups.setdefault(e.copy, []).append(eid)
        return groups

    def reachable_pairs(self) -> list[bool]:
        """Per od pair: does a source-to-sink path exist?"""
        result = []
        for k in range(len(self.net.od_pairs)):
            seen = {("src", k)}
            stack = [("src", k)]
            found = False
            while stack:
                v = stack.pop()
                if v == ("dst", k):
                    found = True
                    break
                for eid in self.out_edges(v):
                    h = self.edges[eid].head
                    if h not in seen and not (h[0] == "dst" and h[1] != k):
                        seen.add(h)
                        stack.append(h)
            result.append(found)
        return result


class InfeasibleOdPair(ValueError):
    """No feasible charging strategy exists for an od pair."""

    def __init__(self, k: int, label_s: str, label_t: str):
        self.k = k
        super().__init__(f"infeasible od pair {k}: no strategy from {label_s!r} to {label_t!r}")


def build_augmented(
    aux: AuxiliaryNetwork,
    sets: BatteryLevelSets | None = None,
    require_feasible: bool = False,
) -> AugmentedGraph:
    """Assemble the charge-augmented graph from the level sets.

    With require_feasible, raises InfeasibleOdPair when some od pair has no
    source-to-sink path (flow callers instead treat such pairs as carrying
    zero flow).
    """
    if sets is None:
        sets = compute_level_sets(aux)
    net = aux.net
    cap = net.capacity
    J = net.curve.intervals

    nodes: list[AugNode] = []
    copies = sorted(sets.b_in)
    for (i, j) in copies:
        for b in sets.levels((i, j)):
            nodes.append(("copy", i, j, b))
    for k in range(len(net.od_pairs)):
        nodes.append(("src", k))
        nodes.append(("dst", k))
    node_set = set(nodes)

    zero = Fraction(0)
    edges: list[AugEdge] = []

    for (i, j) in copies:
        cost = aux.unit_cost(("copy", i, j))
        levels = sets.levels((i, j))
        if cost is not None:
            for b1, b2 in zip(levels, levels[1:]):
                lam = b2 - b1
                edges.append(
                    AugEdge(
                        ("copy", i, j, b1),
                        ("copy", i, j, b2),
                        EdgeKind.CHARGE,
                        lam,
                        cost * lam,
                        zero,
                        zero,
                        (i, j),
                        None,
                    )
                )

    for i in net.station_nodes:
        for j in range(1, J):
            boundary = net.curve.upper(j)
            edges.append(
                AugEdge(
                    ("copy", i, j, boundary),
                    ("copy", i, j + 1, boundary),
                    EdgeKind.CHAIN,
                    zero,
                    zero,
                    zero,
                    zero,
                    None,
                    None,
                )
            )

    for e in aux.edges:
        if e.tail[0] == "copy" and e.head[0] == "copy":
            if e.tail[1] == e.head[1]:
                continue  # same-station moves are the chain edges above
            _, i, j = e.tail
            _, i2, j2 = e.head
            arrivals = set(sets.b_in[(i2, j2)])
            for b_out in sets.b_out[(i, j)]:
                b_arr = b_out - e.d
                if b_arr in arrivals:
                    edges.append(
                        AugEdge(
                            ("copy", i, j, b_out),
                            ("copy", i2, j2, b_arr),
                            EdgeKind.TRAVEL,
                            zero,
                            e.ell,
                            e.d,
                            e.ell,
                            None,
                            (i, i2),
                        )
                    )
        elif e.tail[0] == "src" and e.head[0] == "copy":
            k = e.tail[1]
            _, i, j = e.head
            b = cap - e.d
            lo, hi = aux.bounds(e.head)
            if lo <= b <= hi:
                assert ("copy", i, j, b) in node_set
                edges.append(
                    AugEdge(
                        ("src", k),
                        ("copy", i, j, b),
                        EdgeKind.TRAVEL,
                        zero,
                        e.ell,
                        e.d,
                        e.ell,
                        None,
                        (net.od_pairs[k].s, i),
                    )
                )
        elif e.tail[0] == "copy" and e.head[0] == "dst":
            k = e.head[1]
            _, i, j = e.tail
            b = e.d
            lo, hi = aux.bounds(e.tail)
            if lo <= b <= hi:
                assert ("copy", i, j, b) in node_set
                edges.append(
                    AugEdge(
                        ("copy", i, j, b),
                        ("dst", k),
                        EdgeKind.TRAVEL,
                        zero,
                        e.ell,
                        e.d,
                        e.ell,
                        None,
                        (i, net.od_pairs[k].t),
                    )
                )
        elif e.tail[0] == "src" and e.head[0] == "dst":
            k = e.tail[1]
            edges.append(
                AugEdge(
                    ("src", k),
                    ("dst", k),
                    EdgeKind.TRAVEL,
                    zero,
                    e.ell,
                    e.d,
                    e.ell,
                    None,
                    (net.od_pairs[k].s, net.od_pairs[k].t),
                )
            )

    graph = AugmentedGraph(aux=aux, sets=sets, nodes=tuple(nodes), edges=tuple(edges))
    if require_feasible:
        for k, ok in enumerate(graph.reachable_pairs()):
            if not ok:
                od = net.od_pairs[k]
                raise InfeasibleOdPair(k, net.labels[od.s], net.labels[od.t])
    return graph


@dataclass(frozen=True)
class UnboundedReport:
    """Unbounded od pairs: a path of battery length <= L supports infinite flow."""

    bounded: bool
    pairs: tuple[tuple[int, list[int]], ...] = ()


def detect_unbounded(net: ChargingNetwork, mc: MetricClosure) -> UnboundedReport:
    """Flag od pairs whose battery-shortest path fits in one charge.

    Length exactly L counts as unbounded too: the zero-charge strategy along
    it consumes no station capacity, so no constraint limits its flow.
    """
    offending = []
    for k, od in enumerate(net.od_pairs):
        d = mc.distance(od.s, od.t)
        if d is not None and d <= net.capacity:
            offending.append((k, mc.path_nodes(od.s, od.t)))
    return UnboundedReport(bounded=not offending, pairs=tuple(offending))


def node_label(net: ChargingNetwork, node: AugNode) -> str:
    """Human-readable node name, e.g. (i1,1,4) or (s,9)."""
    if node[0] == "copy":
        _, i, j, b = node
        return f"({net.labels[i]},{j},{b})"
    k = node[1]
    od = net.od_pairs[k]
    if node[0] == "src":
        return f"({net.labels[od.s]},{net.capacity})"
    return f"({net.labels[od.t]},0)"
