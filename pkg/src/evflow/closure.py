"""All-pairs shortest paths over terminals, Assumption-1 check, auxiliary network.

Terminals are the station nodes plus every origin/destination node. For each
ordered terminal pair we keep four exact values: the battery-minimal distance,
the time-minimal distance, and the second metric along the lexicographically
optimal path of the first (both orders), which is what the assumption check
and the auxiliary-network edges need.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction

from .model import ChargingNetwork


def _lex_dijkstra(net: ChargingNetwork, source: int, primary: str):
    """Single-source lexicographic Dijkstra.

    primary = 'd' minimizes (sum d, sum ell); primary = 'ell' the transpose.
    Ties between equal keys keep the predecessor with the smallest node index,
    so path reconstruction is deterministic.
    Returns (dist: {node: (primary, secondary)}, pred: {node: edge id}).
    """
    dist: dict[int, tuple[Fraction, Fraction]] = {source: (Fraction(0), Fraction(0))}
    pred: dict[int, int] = {}
    done: set[int] = set()
    heap: list[tuple[tuple[Fraction, Fraction], int]] = [((Fraction(0), Fraction(0)), source)]
    while heap:
        key, v = heapq.heappop(heap)
        if v in done or dist[v] != key:
            continue
        done.add(v)
        for eid in net.out_edges(v):
            e = net.edges[eid]
            w = (e.d, e.ell) if primary == "d" else (e.ell, e.d)
            cand = (key[0] + w[0], key[1] + w[1])
            u = e.head
            old = dist.get(u)
            if old is None or cand < old:
                dist[u] = cand
                pred[u] = eid
                heapq.heappush(heap, (cand, u))
            elif cand == old and u not in done:
                if net.edges[pred[u]].tail > v:
                    pred[u] = eid
    return dist, pred


@dataclass(frozen=True)
class MetricClosure:
    """Exact shortest-path values between every ordered pair of terminals."""

    terminals: tuple[int, ...]
    d_min: dict[tuple[int, int], Fraction]
    ell_min: dict[tuple[int, int], Fraction]
    ell_along_d: dict[tuple[int, int], Fraction]
    d_along_ell: dict[tuple[int, int], Fraction]
    # per-source predecessor maps of the (d, ell)-lexicographic runs
    pred_d: dict[int, dict[int, int]]

    def distance(self, u: int, v: int) -> Fraction | None:
        """Battery-minimal distance, or None when unreachable."""
        if u == v:
            return Fraction(0)
        return self.d_min.get((u, v))

    def time_along(self, u: int, v: int) -> Fraction | None:
        """Travel time along the lex (d, ell)-optimal u-v path."""
        if u == v:
            return Fraction(0)
        return self.ell_along_d.get((u, v))

    def path_nodes(self, u: int, v: int) -> list[int]:
        """Node sequence of the lex (d, ell)-optimal u-v path."""
        if u == v:
            return [u]
        if (u, v) not in self.d_min:
            raise ValueError(f"no path between terminals {u} and {v}")
        pred = self.pred_d[u]
        # walk predecessors back from v; pred maps node -> incoming edge id
        seq = [v]
        node = v
        while node != u:
            eid = pred[node]
            node = self._edge_tail(eid)
            seq.append(node)
        seq.reverse()
        return seq

    def path_edges(self, u: int, v: int) -> list[int]:
        """Edge-id sequence of the lex (d, ell)-optimal u-v path."""
        if u == v:
            return []
        pred = self.pred_d[u]
        seq = []
        node = v
        while node != u:
            eid = pred[node]
            seq.append(eid)
            node = self._edge_tail(eid)
        seq.reverse()
        return seq

    def _edge_tail(self, eid: int) -> int:
        return self._net.edges[eid].tail

    # back-reference filled by all_pairs_shortest, for path reconstruction
    _net: ChargingNetwork = field(default=None, repr=False, compare=False)


def terminal_nodes(net: ChargingNetwork) -> tuple[int, ...]:
    nodes = set(net.stations)
    for od in net.od_pairs:
        nodes.add(od.s)
        nodes.add(od.t)
    return tuple(sorted(nodes))


def all_pairs_shortest(net: ChargingNetwork) -> MetricClosure:
    """Run both lexicographic closures from every terminal."""
    terms = terminal_nodes(net)
    d_min: dict[tuple[int, int], Fraction] = {}
    ell_min: dict[tuple[int, int], Fraction] = {}
    ell_along_d: dict[tuple[int, int], Fraction] = {}
    d_along_ell: dict[tuple[int, int], Fraction] = {}
    pred_d: dict[int, dict[int, int]] = {}
    for s in terms:
        dist, pred = _lex_dijkstra(net, s, "d")
        pred_d[s] = pred
        for t in terms:
            if t == s or t not in dist:
                continue
            d_min[(s, t)] = dist[t][0]
            ell_along_d[(s, t)] = dist[t][1]
        dist2, _ = _lex_dijkstra(net, s, "ell")
        for t in terms:
            if t == s or t not in dist2:
                continue
            ell_min[(s, t)] = dist2[t][0]
            d_along_ell[(s, t)] = dist2[t][1]
    mc = MetricClosure(
        terminals=terms,
        d_min=d_min,
        ell_min=ell_min,
        ell_along_d=ell_along_d,
        d_along_ell=d_along_ell,
        pred_d=pred_d,
    )
    object.__setattr__(mc, "_net", net)
    return mc


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of the shared-shortest-path check.

    holds is True when, for every ordered terminal pair, some path is
    simultaneously battery-minimal and time-minimal (witnessed by both
    lexicographic closures agreeing). On violation, `pair` names the offending
    ordered terminals and `witness` carries the two diverging values.
    """

    holds: bool
    pair: tuple[int, int] | None = None
    witness: tuple[str, Fraction, Fraction] | None = None


def check_assumption1(net: ChargingNetwork, mc: MetricClosure | None = None) -> AssumptionReport:
    """Check that battery-minimal and time-minimal paths coincide pairwise."""
    if mc is None:
        mc = all_pairs_shortest(net)
    for u in mc.terminals:
        for v in mc.terminals:
            if u == v or (u, v) not in mc.d_min:
                continue
            if mc.ell_along_d[(u, v)] != mc.ell_min[(u, v)]:
                return AssumptionReport(
                    False, (u, v), ("ell", mc.ell_along_d[(u, v)], mc.ell_min[(u, v)])
                )
            if mc.d_along_ell[(u, v)] != mc.d_min[(u, v)]:
                return AssumptionReport(
                    False, (u, v), ("d", mc.d_along_ell[(u, v)], mc.d_min[(u, v)])
                )
    return AssumptionReport(True)


# Auxiliary-network node keys: ("copy", station, j) | ("src", k) | ("dst", k)
AuxNode = tuple


@dataclass(frozen=True)
class AuxEdge:
    tail: AuxNode
    head: AuxNode
    d: Fraction
    ell: Fraction


@dataclass(frozen=True)
class AuxiliaryNetwork:
    """Station-copy network: J copies per station plus per-od-pair terminals.

    Copies of one station are chained with zero-weight edges; two copies of
    different stations are linked iff a directed path within battery range
    exists, carrying the closure's exact (d, ell).
    """

    net: ChargingNetwork
    closure: MetricClosure
    nodes: tuple[AuxNode, ...]
    edges: tuple[AuxEdge, ...]

    def copy_nodes(self) -> list[AuxNode]:
        return [n for n in self.nodes if n[0] == "copy"]

    def bounds(self, copy: AuxNode) -> tuple[Fraction, Fraction]:
        """Battery bounds [alpha_j, alpha_{j+1}] of a station copy."""
        _, _, j = copy
        return self.net.curve.lower(j), self.net.curve.upper(j)

    def unit_cost(self, copy: AuxNode) -> Fraction | None:
        """Per-battery-unit charging cost tau + (1+rho)/r; None when r = 0."""
        _, i, j = copy
        st = self.net.stations[i]
        r = st.speeds[j - 1]
        if r == 0:
            return None
        return st.prices[j - 1] + (1 + st.occupancy_price) / r

    def in_edges(self, node: AuxNode) -> list[AuxEdge]:
        return self._adjacency()[1].get(node, [])

    def out_edges(self, node: AuxNode) -> list[AuxEdge]:
        return self._adjacency()[0].get(node, [])

    def _adjacency(self):
        cached = getattr(self, "_adj", None)
        if cached is None:
            out: dict[AuxNode, list[AuxEdge]] = {}
            inc: dict[AuxNode, list[AuxEdge]] = {}
            for e in self.edges:
                out.setdefault(e.tail, []).append(e)
                inc.setdefault(e.head, []).append(e)
            cached = (out, inc)
            object.__setattr__(self, "_adj", cached)
        return cached


def build_auxiliary(net: ChargingNetwork, mc: MetricClosure | None = None) -> AuxiliaryNetwork:
    """Construct the station-copy auxiliary network from the metric closure."""
    if mc is None:
        mc = all_pairs_shortest(net)
    J = net.curve.intervals
    cap = net.capacity
    stations = net.station_nodes
    nodes: list[AuxNode] = [("copy", i, j) for i in stations for j in range(1, J + 1)]
    for k in range(len(net.od_pairs)):
        nodes.append(("src", k))
        nodes.append(("dst", k))

    edges: list[AuxEdge] = []
    zero = Fraction(0)
    for i in stations:
        # chain between copies of one station, both directions, zero weight
        for j in range(1, J + 1):
            for j2 in range(1, J + 1):
                if j != j2:
                    edges.append(AuxEdge(("copy", i, j), ("copy", i, j2), zero, zero))
        for i2 in stations:
            if i2 == i:
                continue
            d = mc.distance(i, i2)
            if d is None or d > cap:
                continue
            ell = mc.time_along(i, i2)
            for j in range(1, J + 1):
                for j2 in range(1, J + 1):
                    edges.append(AuxEdge(("copy", i, j), ("copy", i2, j2), d, ell))
    for k, od in enumerate(net.od_pairs):
        for i in stations:
            d = mc.distance(od.s, i)
            if d is not None and d <= cap:
                ell = mc.time_along(od.s, i)
                for j in range(1, J + 1):
                    edges.append(AuxEdge(("src", k), ("copy", i, j), d, ell))
            d = mc.distance(i, od.t)
            if d is not None and d <= cap:
                ell = mc.time_along(i, od.t)
                for j in range(1, J + 1):
                    edges.append(AuxEdge(("copy", i, j), ("dst", k), d, ell))
        d = mc.distance(od.s, od.t)
        if d is not None and d <= cap:
            edges.append(AuxEdge(("src", k), ("dst", k), d, mc.time_along(od.s, od.t)))

    return AuxiliaryNetwork(net=net, closure=mc, nodes=tuple(nodes), edges=tuple(edges))
