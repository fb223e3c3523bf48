"""Maximum and minimum-cost EV flow over the charge-augmented graph.

Per-commodity edge flows plus a charger-allocation vector z: charge edges of
one station copy share the capacity r_ij * z_ij; allocations satisfy
sum_j z_ij = a_i. Min-cost adds per-commodity demand rows and the per-unit
edge costs gamma. Optimal edge flows are decomposed into charging strategies.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .augment import AugmentedGraph, detect_unbounded
from .closure import check_assumption1
from .lp import LpInfeasible, LpProblem, LpSolution, solve_lp
from .model import ChargingNetwork
from .routing import ChargingStrategy, charge_split, reconstruct_strategy


class UnboundedFlow(ValueError):
    """Some od pair admits a within-range path, so flow value is unbounded."""

    def __init__(self, pairs):
        self.pairs = pairs
        ks = ", ".join(str(k) for k, _ in pairs)
        super().__init__(f"unbounded od pair(s): {ks}")


class AssumptionViolated(ValueError):
    """The shared-shortest-path assumption fails; names the witness pair."""

    def __init__(self, report, net: ChargingNetwork):
        self.report = report
        u, v = report.pair
        metric, along, best = report.witness
        super().__init__(
            f"battery-minimal and time-minimal paths diverge between "
            f"{net.labels[u]!r} and {net.labels[v]!r}: {metric} along the other "
            f"metric's optimum is {along}, the true minimum is {best}"
        )


class InfeasibleDemand(ValueError):
    def __init__(self, certificate):
        self.certificate = certificate
        super().__init__("demands cannot be met: LP infeasible")


@dataclass(frozen=True)
class FlowSolution:
    problem: str                       # 'max-flow' | 'min-cost'
    objective: Fraction
    edge_flow: dict[tuple[int, int], Fraction]   # (commodity, aug edge id) -> flow
    z: dict[tuple[int, int], Fraction]           # (station, interval) -> chargers
    strategies: list[tuple[ChargingStrategy, Fraction]]
    pi: dict[tuple[int, int], Fraction]          # capacity-row duals
    y: dict[int, Fraction]                       # allocation-row duals
    phi: dict[int, Fraction] = field(default_factory=dict)   # demand duals
    w: dict[int, Fraction] = field(default_factory=dict)     # edge-capacity duals
    dropped_cycles: Fraction = Fraction(0)
    lp: LpProblem | None = None
    lp_solution: LpSolution | None = None


def _usable_edges(graph: AugmentedGraph, k: int) -> list[int]:
    """Edge ids carrying commodity k: everything but other pairs' terminal edges.

    Other commodities' source/sink edges are structurally zero for k (their
    endpoints have no way in or out), so they are dropped up front; every
    remaining edge gets a flow variable and every interior node it touches a
    conservation row, matching the edge formulation one-to-one.
    """
    out = []
    for eid, e in enumerate(graph.edges):
        skip = False
        for node in (e.tail, e.head):
            if node[0] in ("src", "dst") and node[1] != k:
                skip = True
        if not skip:
            out.append(eid)
    return out


def _fvar(k: int, eid: int) -> str:
    return f"f{k}_{eid}"


def _zvar(i: int, j: int) -> str:
    return f"z_{i}_{j}"


def _build_flow_lp(graph: AugmentedGraph, mincost: bool) -> tuple[LpProblem, dict[int, list[int]]]:
    net = graph.net
    lp = LpProblem(
        name="min-cost EV flow" if mincost else "max EV flow",
        sense="min" if mincost else "max",
    )
    node_ids = {n: idx for idx, n in enumerate(graph.nodes)}
    usable: dict[int, list[int]] = {}
    usable_set: dict[int, set[int]] = {}

    for k in range(len(net.od_pairs)):
        usable[k] = _usable_edges(graph, k)
        usable_set[k] = set(usable[k])
        for eid in usable[k]:
            e = graph.edges[eid]
            if mincost:
                lp.add_var(_fvar(k, eid), obj=e.gamma)
            elif e.head == graph.sink(k):
                lp.add_var(_fvar(k, eid), obj=1)
            else:
                lp.add_var(_fvar(k, eid))
    for i in net.station_nodes:
        for j in range(1, net.curve.intervals + 1):
            lp.add_var(_zvar(i, j))

    for (i, j), eids in sorted(graph.charge_edges_by_copy().items()):
        coeffs: dict[str, Fraction] = {}
        for k in usable:
            for eid in eids:
                if eid in usable_set[k]:
                    coeffs[_fvar(k, eid)] = graph.edges[eid].lam
        if not coeffs:
            continue
        coeffs[_zvar(i, j)] = -net.stations[i].speeds[j - 1]
        lp.add_constraint(f"cap_{i}_{j}", coeffs, "<=", 0)
    for i in net.station_nodes:
        coeffs = {_zvar(i, j): Fraction(1) for j in range(1, net.curve.intervals + 1)}
        lp.add_constraint(f"alloc_{i}", coeffs, "==", net.stations[i].chargers)

    for k in range(len(net.od_pairs)):
        touched: dict[tuple, dict[str, Fraction]] = {}
        for eid in usable[k]:
            e = graph.edges[eid]
            touched.setdefault(e.tail, {})[_fvar(k, eid)] = Fraction(1)
            touched.setdefault(e.head, {})[_fvar(k, eid)] = Fraction(-1)
        for node in sorted(touched, key=node_ids.get):
            if node == graph.source(k) or node == graph.sink(k):
                continue
            lp.add_constraint(f"cons{k}_{node_ids[node]}", touched[node], "==", 0)
        if mincost:
            coeffs = {
                _fvar(k, eid): Fraction(1)
                for eid in usable[k]
                if graph.edges[eid].head == graph.sink(k)
            }
            demand = net.od_pairs[k].demand
            if coeffs or demand > 0:
                lp.add_constraint(f"dem_{k}", coeffs, ">=", demand)
    return lp, usable


def build_maxflow_lp(graph: AugmentedGraph) -> LpProblem:
    """Edge formulation of the maximum EV flow (station capacities only)."""
    report = detect_unbounded(graph.net, graph.aux.closure)
    if not report.bounded:
        raise UnboundedFlow(report.pairs)
    return _build_flow_lp(graph, mincost=False)[0]


def build_mincost_lp(graph: AugmentedGraph) -> LpProblem:
    """Edge formulation of the minimum-cost EV flow with demand rows."""
    report = detect_unbounded(graph.net, graph.aux.closure)
    if not report.bounded:
        raise UnboundedFlow(report.pairs)
    rep = check_assumption1(graph.net, graph.aux.closure)
    if not rep.holds:
        raise AssumptionViolated(rep, graph.net)
    return _build_flow_lp(graph, mincost=True)[0]


def _extract(graph, lp, sol, usable, mincost, eps) -> FlowSolution:
    net = graph.net
    edge_flow: dict[tuple[int, int], Fraction] = {}
    for k, eids in usable.items():
        for eid in eids:
            v = sol.values[_fvar(k, eid)]
            if v > eps:
                edge_flow[(k, eid)] = v
    z = {}
    pi = {}
    y = {}
    for i in net.station_nodes:
        for j in range(1, net.curve.intervals + 1):
            z[(i, j)] = sol.values[_zvar(i, j)]
            d = sol.dual(f"cap_{i}_{j}")
            pi[(i, j)] = -d if mincost else d
        d = sol.dual(f"alloc_{i}")
        y[i] = -d if mincost else d
    phi = {}
    if mincost:
        for k in range(len(net.od_pairs)):
            phi[k] = sol.dual(f"dem_{k}")

    strategies, dropped = decompose_flow(graph, edge_flow, eps=eps)
    return FlowSolution(
        problem="min-cost" if mincost else "max-flow",
        objective=sol.objective,
        edge_flow=edge_flow,
        z=z,
        strategies=strategies,
        pi=pi,
        y=y,
        phi=phi,
        dropped_cycles=dropped,
        lp=lp,
        lp_solution=sol,
    )


def solve_maxflow(graph: AugmentedGraph, mode: str = "exact", tol: float = 1e-9) -> FlowSolution:
    """Maximum EV flow; refuses unbounded instances with a witness."""
    report = detect_unbounded(graph.net, graph.aux.closure)
    if not report.bounded:
        raise UnboundedFlow(report.pairs)
    lp_problem, usable = _build_flow_lp(graph, mincost=False)
    sol = solve_lp(lp_problem, mode=mode, tol=tol)
    eps = Fraction(0) if mode == "exact" else 1e-12
    return _extract(graph, lp_problem, sol, usable, mincost=False, eps=eps)


def solve_mincost(graph: AugmentedGraph, mode: str = "exact", tol: float = 1e-9) -> FlowSolution:
    """Minimum-cost EV flow meeting demands; needs the shared-shortest-path assumption."""
    report = detect_unbounded(graph.net, graph.aux.closure)
    if not report.bounded:
        raise UnboundedFlow(report.pairs)
    rep = check_assumption1(graph.net, graph.aux.closure)
    if not rep.holds:
        raise AssumptionViolated(rep, graph.net)
    lp_problem, usable = _build_flow_lp(graph, mincost=True)
    try:
        sol = solve_lp(lp_problem, mode=mode, tol=tol)
    except LpInfeasible as exc:
        raise InfeasibleDemand(exc.certificate) from exc
    eps = Fraction(0) if mode == "exact" else 1e-12
    return _extract(graph, lp_problem, sol, usable, mincost=True, eps=eps)


def decompose_flow(
    graph: AugmentedGraph,
    edge_flow: dict[tuple[int, int], Fraction],
    eps=Fraction(0),
) -> tuple[list[tuple[ChargingStrategy, Fraction]], Fraction]:
    """Path-decompose per-commodity edge flows into charging strategies.

    Cycles in the support carry no source-to-sink value and are dropped; the
    returned strategies' edge loads plus dropped cycle flow reproduce the
    input exactly. Deterministic: walks follow the smallest usable edge id.
    """
    strategies: list[tuple[ChargingStrategy, Fraction]] = []
    dropped = Fraction(0) if eps == 0 else 0.0
    for k in range(len(graph.net.od_pairs)):
        remaining: dict[int, Fraction] = {
            eid: v for (kk, eid), v in edge_flow.items() if kk == k and v > eps
        }
        src, dst = graph.source(k), graph.sink(k)

        def next_edge(node):
            best = None
            for eid in graph.out_edges(node):
                if remaining.get(eid, 0) > eps and (best is None or eid < best):
                    best = eid
            return best

        def cancel(walk_slice):
            nonlocal dropped
            delta = min(remaining[e] for e in walk_slice)
            for e in walk_slice:
                remaining[e] -= delta
                if remaining[e] <= eps:
                    del remaining[e]
            dropped += delta

        guard = 10 * (len(graph.edges) + 5)
        while guard:
            guard -= 1
            start_eid = next_edge(src)
            if start_eid is None:
                break
            walk = [start_eid]
            node = graph.edges[start_eid].head
            seen_at = {src: 0, node: 1}
            restart = False
            while node != dst:
                eid = next_edge(node)
                if eid is None:
                    raise RuntimeError("flow conservation violated during decomposition")
                nxt = graph.edges[eid].head
                walk.append(eid)
                if nxt in seen_at:
                    cancel(walk[seen_at[nxt]:])
                    restart = True
                    break
                seen_at[nxt] = len(seen_at)
                node = nxt
            if restart:
                continue
            delta = min(remaining[e] for e in walk)
            for e in walk:
                remaining[e] -= delta
                if remaining[e] <= eps:
                    del remaining[e]
            strategies.append((reconstruct_strategy(graph, walk, k), delta))
        if not guard:
            raise RuntimeError("flow decomposition failed to terminate")
        # leftover support carries no source flow: pure cycles, cancel them
        while remaining:
            eid0 = min(remaining)
            node = graph.edges[eid0].tail
            walk = []
            seen_at = {node: 0}
            while True:
                eid = next_edge(node)
                if eid is None:
                    raise RuntimeError("flow conservation violated during cycle sweep")
                nxt = graph.edges[eid].head
                walk.append(eid)
                if nxt in seen_at:
                    cancel(walk[seen_at[nxt]:])
                    break
                seen_at[nxt] = len(seen_at)
                node = nxt
    return strategies, dropped


@dataclass(frozen=True)
class StationCheck:
    station: int
    required: Fraction
    available: int
    violations: tuple[tuple[int, Fraction], ...]  # (interval or 0=total, excess)


@dataclass(frozen=True)
class FlowReport:
    ok: bool
    stations: tuple[StationCheck, ...]

    def slack(self, i: int) -> Fraction:
        for s in self.stations:
            if s.station == i:
                return s.available - s.required
        raise KeyError(i)


def verify_flow(
    net: ChargingNetwork, strategies: list[tuple[ChargingStrategy, Fraction]]
) -> FlowReport:
    """Check that some charger allocation supports the strategies' charge loads.

    Separable per station: interval j needs Q_ij / r_ij chargers, so the load
    is supportable iff the per-interval needs sum to at most a_i (zero-speed
    intervals must carry zero load).
    """
    load: dict[tuple[int, int], Fraction] = {}
    for strategy, x in strategies:
        if x == 0:
            continue
        for (i, j), q in charge_split(net, strategy).items():
            load[(i, j)] = load.get((i, j), Fraction(0)) + q * x
    checks = []
    ok = True
    for i in net.station_nodes:
        st = net.stations[i]
        required = Fraction(0)
        violations = []
        for j in range(1, net.curve.intervals + 1):
            q = load.get((i, j), Fraction(0))
            if q == 0:
                continue
            r = st.speeds[j - 1]
            if r == 0:
                violations.append((j, q))
                continue
            required += q / r
        if required > st.chargers:
            violations.append((0, required - st.chargers))
        if violations:
            ok = False
        checks.append(StationCheck(i, required, st.chargers, tuple(violations)))
    return FlowReport(ok=ok, stations=tuple(checks))
