"""Single-EV optimal charging strategy and strategy bookkeeping.

A strategy is an original-network walk plus the battery gained at each visited
position. Costs are exact: travel time plus, per battery unit charged in
interval j of station i, tau_ij + (1 + rho_i)/r_ij.

The optimal strategy search runs over a compact graph whose nodes are
(station copy, arrival level) pairs and whose edges bundle one charging
decision with one travel leg: charge just enough to enter the next copy at
its lower bound when that copy is cheaper per unit, otherwise charge to the
current interval's top. Every path of this graph is a feasible strategy
following that two-action pattern, and under the shared-shortest-path
assumption the cheapest such path is globally optimal.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction

from .augment import AugmentedGraph, EdgeKind, InfeasibleOdPair
from .model import ChargingNetwork


class FeasibilityError(ValueError):
    """A strategy violates a battery constraint; names the rule and node."""

    def __init__(self, rule: str, node_label: str, detail: str):
        self.rule = rule
        self.node_label = node_label
        super().__init__(f"{rule} violated at {node_label}: {detail}")


def unit_cost(net: ChargingNetwork, i: int, j: int) -> Fraction | None:
    """Per-unit charging cost tau_ij + (1+rho_i)/r_ij; None encodes +inf (r=0)."""
    st = net.stations[i]
    r = st.speeds[j - 1]
    if r == 0:
        return None
    return st.prices[j - 1] + (1 + st.occupancy_price) / r


@dataclass(frozen=True)
class ChargingStrategy:
    """Walk plus charge amounts, aligned by position (walks may revisit nodes)."""

    k: int                          # od pair index
    path: tuple[int, ...]           # node sequence from s_k to t_k
    charges: tuple[Fraction, ...]   # battery gained at each path position
    edge_ids: tuple[int, ...]       # original edges traversed, len(path) - 1

    @property
    def charge_total(self) -> Fraction:
        return sum(self.charges, Fraction(0))


def battery_trace(net: ChargingNetwork, strategy: ChargingStrategy) -> list[tuple[Fraction, Fraction]]:
    """(arrival, departure) battery per position; raises FeasibilityError."""
    cap = net.capacity
    labels = net.labels
    path, charges = strategy.path, strategy.charges
    if len(strategy.edge_ids) != len(path) - 1:
        raise FeasibilityError("path", labels[path[0]], "edge/node sequence length mismatch")
    trace = []
    level = cap  # departs fully charged
    for pos, v in enumerate(path):
        arrival = level
        if arrival < 0:
            raise FeasibilityError(
                "arrival-nonnegative", labels[v], f"arrived with {arrival}"
            )
        q = charges[pos]
        if q < 0:
            raise FeasibilityError("charge-nonnegative", labels[v], f"negative charge {q}")
        if q > 0 and v not in net.stations:
            raise FeasibilityError(
                "charge-at-stations-only", labels[v], f"charged {q}"
            )
        departure = arrival + q
        if departure > cap:
            raise FeasibilityError(
                "departure-within-capacity", labels[v], f"left with {departure} > {cap}"
            )
        trace.append((arrival, departure))
        if pos < len(path) - 1:
            e = net.edges[strategy.edge_ids[pos]]
            if e.tail != v or e.head != path[pos + 1]:
                raise FeasibilityError("path", labels[v], f"edge {strategy.edge_ids[pos]} detached")
            level = departure - e.d
    return trace


def charge_split(net: ChargingNetwork, strategy: ChargingStrategy) -> dict[tuple[int, int], Fraction]:
    """Per (station, interval) charge amounts q_ij, summed over visits.

    A charge from b to b+q spreads over the intervals it passes through,
    which reproduces the prefix-min split of the per-interval definition.
    """
    trace = battery_trace(net, strategy)
    split: dict[tuple[int, int], Fraction] = {}
    alphas = net.curve.thresholds
    for pos, v in enumerate(strategy.path):
        arrival, departure = trace[pos]
        if departure == arrival:
            continue
        for j in range(1, net.curve.intervals + 1):
            overlap = min(departure, alphas[j]) - max(arrival, alphas[j - 1])
            if overlap > 0:
                split[(v, j)] = split.get((v, j), Fraction(0)) + overlap
    return split


def strategy_cost(net: ChargingNetwork, strategy: ChargingStrategy) -> Fraction:
    """Total time + money cost; validates feasibility (including zero-speed charging)."""
    total = Fraction(0)
    for eid in strategy.edge_ids:
        total += net.edges[eid].ell
    for (i, j), q in sorted(charge_split(net, strategy).items()):
        c = unit_cost(net, i, j)
        if c is None:
            raise FeasibilityError(
                "charging speed > 0", net.labels[i], f"charged {q} in zero-speed interval {j}"
            )
        total += c * q
    return total


def strategy_drive_time(net: ChargingNetwork, strategy: ChargingStrategy) -> Fraction:
    return sum((net.edges[eid].ell for eid in strategy.edge_ids), Fraction(0))


def strategy_charge_time(net: ChargingNetwork, strategy: ChargingStrategy) -> Fraction:
    total = Fraction(0)
    for (i, j), q in charge_split(net, strategy).items():
        r = net.stations[i].speeds[j - 1]
        if r == 0:
            raise FeasibilityError(
                "charging speed > 0", net.labels[i], f"charged {q} in zero-speed interval {j}"
            )
        total += q / r
    return total


def strategy_money(net: ChargingNetwork, strategy: ChargingStrategy) -> Fraction:
    """Monetary part: per-unit prices plus occupancy price for the time plugged in."""
    total = Fraction(0)
    for (i, j), q in charge_split(net, strategy).items():
        st = net.stations[i]
        r = st.speeds[j - 1]
        total += st.prices[j - 1] * q + st.occupancy_price * q / r
    return total


@dataclass(frozen=True)
class _RouteEdge:
    target: tuple
    cost: Fraction
    charge: Fraction        # charged at the tail copy before leaving
    seg: tuple[int, int] | None  # physical endpoints of the travel leg


def _route_edges(graph: AugmentedGraph, node: tuple, k: int) -> list[_RouteEdge]:
    """Outgoing decisions from a search node (lazy edge generation)."""
    aux = graph.aux
    net = graph.net
    sets = graph.sets
    cap = net.capacity
    out: list[_RouteEdge] = []
    if node[0] == "src":
        od = net.od_pairs[k]
        for i in net.station_nodes:
            d = aux.closure.distance(od.s, i)
            if d is None or d > cap:
                continue
            ell = aux.closure.time_along(od.s, i)
            b = cap - d
            for j in range(1, net.curve.intervals + 1):
                if net.curve.lower(j) <= b <= net.curve.upper(j):
                    out.append(_RouteEdge(("copy", i, j, b), ell, Fraction(0), (od.s, i)))
        d = aux.closure.distance(od.s, od.t)
        if d is not None and d <= cap:
            out.append(
                _RouteEdge(("dst", k), aux.closure.time_along(od.s, od.t), Fraction(0), (od.s, od.t))
            )
        return out
    if node[0] == "dst":
        return out

    _, i, j, b = node
    hi = net.curve.upper(j)
    cost = unit_cost(net, i, j)
    for aux_edge in aux.out_edges(("copy", i, j)):
        if aux_edge.head[0] == "copy":
            _, i2, j2 = aux_edge.head
            lo2 = net.curve.lower(j2)
            hi2 = net.curve.upper(j2)
            cost2 = unit_cost(net, i2, j2)
            cheaper_next = cost is None or (cost2 is not None and cost2 < cost)
            if cheaper_next:
                dep = lo2 + aux_edge.d  # charge just enough to enter at the bottom
                if b <= dep <= hi and (dep == b or cost is not None):
                    x = dep - b
                    out.append(
                        _RouteEdge(
                            ("copy", i2, j2, lo2),
                            (x * cost if x else Fraction(0)) + aux_edge.ell,
                            x,
                            (i, i2) if i != i2 else None,
                        )
                    )
            else:
                arr = hi - aux_edge.d  # charge to the interval top, then travel
                if lo2 <= arr <= hi2 and (hi == b or cost is not None):
                    assert arr in sets.b_in[(i2, j2)] or arr == lo2
                    x = hi - b
                    out.append(
                        _RouteEdge(
                            ("copy", i2, j2, arr),
                            (x * cost if x else Fraction(0)) + aux_edge.ell,
                            x,
                            (i, i2) if i != i2 else None,
                        )
                    )
        elif aux_edge.head == ("dst", k):
            dep = max(b, aux_edge.d)  # arrive empty, or with surplus if already above
            if dep <= hi and (dep == b or cost is not None):
                x = dep - b
                out.append(
                    _RouteEdge(
                        ("dst", k),
                        (x * cost if x else Fraction(0)) + aux_edge.ell,
                        x,
                        (i, net.od_pairs[k].t),
                    )
                )
    return out


def route_single(graph: AugmentedGraph, k: int) -> ChargingStrategy:
    """Optimal charging strategy for od pair k (shared-shortest-path networks).

    Nonnegative-weight Dijkstra over the charge-decision graph; ties are
    broken toward lexicographically smaller node keys, so the output is
    deterministic. Raises InfeasibleOdPair when no strategy exists.
    """
    net = graph.net
    start = ("src", k)
    goal = ("dst", k)
    dist: dict[tuple, Fraction] = {start: Fraction(0)}
    pred: dict[tuple, tuple[tuple, _RouteEdge]] = {}
    done: set[tuple] = set()
    heap: list[tuple[Fraction, tuple]] = [(Fraction(0), start)]
    while heap:
        key, node = heapq.heappop(heap)
        if node in done or dist[node] != key:
            continue
        if node == goal:
            break
        done.add(node)
        for edge in _route_edges(graph, node, k):
            cand = key + edge.cost
            old = dist.get(edge.target)
            if old is None or cand < old:
                dist[edge.target] = cand
                pred[edge.target] = (node, edge)
                heapq.heappush(heap, (cand, edge.target))
            elif cand == old and edge.target not in done and pred[edge.target][0] > node:
                pred[edge.target] = (node, edge)
    if goal not in dist or (goal not in done and goal not in pred):
        od = net.od_pairs[k]
        raise InfeasibleOdPair(k, net.labels[od.s], net.labels[od.t])

    hops: list[tuple[tuple, _RouteEdge]] = []
    node = goal
    while node != start:
        prev, edge = pred[node]
        hops.append((prev, edge))
        node = prev
    hops.reverse()

    od = net.od_pairs[k]
    path = [od.s]
    charges = [Fraction(0)]
    edge_ids: list[int] = []
    for _, edge in hops:
        charges[-1] += edge.charge
        if edge.seg is not None:
            u, v = edge.seg
            seg_edges = graph.aux.closure.path_edges(u, v)
            for eid in seg_edges:
                edge_ids.append(eid)
                path.append(net.edges[eid].head)
                charges.append(Fraction(0))
    return ChargingStrategy(k=k, path=tuple(path), charges=tuple(charges), edge_ids=tuple(edge_ids))


def reconstruct_strategy(graph: AugmentedGraph, aug_edge_ids: list[int], k: int) -> ChargingStrategy:
    """Expand an augmented-graph source-to-sink path into an original strategy.

    Travel edges are stitched from the closure's lexicographically shortest
    segments; charge-edge gains accumulate at the current position.
    """
    net = graph.net
    od = net.od_pairs[k]
    path = [od.s]
    charges = [Fraction(0)]
    edge_ids: list[int] = []
    for aeid in aug_edge_ids:
        e = graph.edges[aeid]
        if e.kind is EdgeKind.CHARGE:
            charges[-1] += e.lam
        elif e.kind is EdgeKind.TRAVEL:
            u, v = e.phys
            for eid in graph.aux.closure.path_edges(u, v):
                edge_ids.append(eid)
                path.append(net.edges[eid].head)
                charges.append(Fraction(0))
    if path[-1] != od.t:
        raise ValueError(f"augmented path does not end at the destination of pair {k}")
    return ChargingStrategy(k=k, path=tuple(path), charges=tuple(charges), edge_ids=tuple(edge_ids))


def conforms_to_charge_pattern(graph: AugmentedGraph, strategy: ChargingStrategy) -> bool:
    """Check the two-action optimality pattern on consecutive charging stops.

    Between consecutive positive-charge stops u, v (battery consumed D on the
    walk between them): if u's unit cost exceeds v's, u must have departed
    with exactly v's-interval-bottom + D; otherwise u must have charged to an
    interval top. Charges spanning several intervals are checked per interval
    (the within-station boundary makes both actions coincide there).
    """
    net = graph.net
    trace = battery_trace(net, strategy)
    curve = net.curve
    # charging stops as (interval copy, arrival, departure, path position)
    stops: list[tuple[tuple[int, int], Fraction, Fraction, int]] = []
    for pos, v in enumerate(strategy.path):
        arrival, departure = trace[pos]
        if departure == arrival:
            continue
        b = arrival
        while b < departure:
            j = curve.interval_of(b)
            top = min(curve.upper(j), departure)
            stops.append(((v, j), b, top, pos))
            b = top
    for n in range(len(stops) - 1):
        (i1, j1), _, dep1, pos1 = stops[n]
        (i2, j2), arr2, _, pos2 = stops[n + 1]
        c1 = unit_cost(net, i1, j1)
        c2 = unit_cost(net, i2, j2)
        if pos1 == pos2 or (i1 == i2 and dep1 == arr2):
            continue  # same charge crossing a boundary: both actions coincide
        consumed = sum(
            (net.edges[eid].d for eid in strategy.edge_ids[pos1:pos2]), Fraction(0)
        )
        if c2 is not None and (c1 is None or c1 > c2):
            if dep1 != curve.lower(j2) + consumed:
                return False
        else:
            if dep1 != curve.upper(j1):
                return False
    return True
