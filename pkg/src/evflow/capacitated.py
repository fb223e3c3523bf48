"""Edge-capacitated EV flow via column generation with an exact pricing oracle.

The capacitated variants are NP-hard (PARTITION reduces to them), so instead
of a polynomial scheme the restricted master LP over generated strategy
columns is solved exactly, and an exact label-setting search over
(node, battery) states prices out the most violated strategy per od pair.
Battery states live on the grid spanned by the gcd of all edge consumptions
and threshold gaps, which contains every extreme charging level; worst case
this is exponential in the encoding, fine at desk scale.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction

from .flows import FlowSolution, InfeasibleDemand, UnboundedFlow
from .lp import LpInfeasible, LpProblem, solve_lp
from .model import ChargingNetwork, Edge, NetworkError, Station, ChargingCurve, OdPair
from .routing import ChargingStrategy, charge_split, strategy_cost, unit_cost


def battery_grid_step(net: ChargingNetwork) -> Fraction:
    """gcd of all edge consumptions, threshold gaps, and L."""
    values = [net.capacity]
    values.extend(e.d for e in net.edges if e.d)
    a = net.curve.thresholds
    values.extend(a[j + 1] - a[j] for j in range(len(a) - 1))
    den = 1
    for v in values:
        den = den * v.denominator // math.gcd(den, v.denominator)
    num = 0
    for v in values:
        num = math.gcd(num, v.numerator * (den // v.denominator))
    return Fraction(num, den)


@dataclass(frozen=True)
class PricingResult:
    """Cheapest strategy for the pricing objective; value None means +infinity."""

    value: Fraction | None
    strategy: ChargingStrategy | None


def pricing_oracle(
    net: ChargingNetwork,
    k: int,
    edge_duals: dict[int, Fraction],
    charge_duals: dict[tuple[int, int], Fraction],
    include_strategy_cost: bool = False,
    grid: Fraction | None = None,
    max_states: int = 2_000_000,
) -> PricingResult:
    """Exact minimizer of sum(edge costs) + sum(charge costs * q) over strategies.

    Edge costs are the duals w_e, charge costs the duals pi_ij; with
    include_strategy_cost the strategy's own cost joins in (travel time per
    edge, full per-unit charging cost per interval), which is the min-cost
    variant's pricing objective. Label-setting over (node, battery) states
    with Pareto dominance (higher battery at lower cost wins); charging
    advances one grid step at a time at the per-unit cost of the current
    interval, zero-speed intervals are impassable. All costs must be
    nonnegative.
    """
    od = net.od_pairs[k]
    cap = net.capacity
    if grid is None:
        grid = battery_grid_step(net)
    if grid <= 0:
        grid = cap if cap > 0 else Fraction(1)
    if cap / grid > max_states:
        raise NetworkError(f"pricing grid too fine: {cap / grid} levels")

    def cost_of_edge(eid: int) -> Fraction:
        base = edge_duals.get(eid, Fraction(0))
        if include_strategy_cost:
            base = base + net.edges[eid].ell
        return base

    def cost_of_charge(i: int, j: int) -> Fraction | None:
        if net.stations[i].speeds[j - 1] == 0:
            return None
        base = charge_duals.get((i, j), Fraction(0))
        if include_strategy_cost:
            base = base + unit_cost(net, i, j)
        return base

    start = (od.s, cap)
    dist: dict[tuple[int, Fraction], Fraction] = {start: Fraction(0)}
    pred: dict[tuple[int, Fraction], tuple[tuple[int, Fraction], int | None]] = {}
    frontier: dict[int, list[tuple[Fraction, Fraction]]] = {}  # node -> (b, cost) pareto
    heap: list[tuple[Fraction, tuple[int, Fraction]]] = [(Fraction(0), start)]
    done: set[tuple[int, Fraction]] = set()
    best_t: tuple[Fraction, tuple[int, Fraction]] | None = None

    def dominated(node: int, b: Fraction, cost: Fraction) -> bool:
        for b2, c2 in frontier.get(node, ()):
            if b2 >= b and c2 <= cost and (b2 > b or c2 < cost):
                return True
        return False

    while heap:
        cost, state = heapq.heappop(heap)
        if state in done or dist[state] != cost:
            continue
        done.add(state)
        node, b = state
        frontier.setdefault(node, []).append((b, cost))
        if node == od.t:
            best_t = (cost, state)
            break
        relax = []
        for eid in net.out_edges(node):
            e = net.edges[eid]
            if e.d <= b:
                relax.append(((e.head, b - e.d), cost + cost_of_edge(eid), eid))
        if node in net.stations and b < cap:
            j = net.curve.interval_of(b)
            c = cost_of_charge(node, j)
            if c is not None:
                relax.append(((node, b + grid), cost + c * grid, None))
        for nstate, ncost, via in relax:
            if dominated(nstate[0], nstate[1], ncost):
                continue
            old = dist.get(nstate)
            if old is None or ncost < old:
                dist[nstate] = ncost
                pred[nstate] = (state, via)
                heapq.heappush(heap, (ncost, nstate))
            elif ncost == old and nstate not in done and pred[nstate][0] > state:
                pred[nstate] = (state, via)

    if best_t is None:
        return PricingResult(value=None, strategy=None)

    value, state = best_t
    hops: list[tuple[tuple[int, Fraction], int | None]] = []
    while state != start:
        prev, via = pred[state]
        hops.append((state, via))
        state = prev
    hops.reverse()
    path = [od.s]
    charges = [Fraction(0)]
    edge_ids: list[int] = []
    level = cap
    for (node, b), via in hops:
        if via is None:
            charges[-1] += b - level
        else:
            path.append(node)
            charges.append(Fraction(0))
            edge_ids.append(via)
        level = b
    strategy = ChargingStrategy(k=k, path=tuple(path), charges=tuple(charges), edge_ids=tuple(edge_ids))
    return PricingResult(value=value, strategy=strategy)


@dataclass(frozen=True)
class _Column:
    var: str
    k: int
    strategy: ChargingStrategy
    split: dict[tuple[int, int], Fraction]
    cost: Fraction
    edge_use: dict[int, int]  # original edge id -> multiplicity


def _strategy_column(net: ChargingNetwork, idx: int, strategy: ChargingStrategy) -> _Column:
    split = charge_split(net, strategy)
    use: dict[int, int] = {}
    for eid in strategy.edge_ids:
        use[eid] = use.get(eid, 0) + 1
    return _Column(
        var=f"x{idx}",
        k=strategy.k,
        strategy=strategy,
        split=split,
        cost=strategy_cost(net, strategy),
        edge_use=use,
    )


def _build_master(
    net: ChargingNetwork,
    columns: list[_Column],
    mincost: bool,
    phase1: bool = False,
) -> LpProblem:
    lp = LpProblem(
        name=("feasibility master" if phase1 else f"{'min-cost' if mincost else 'max-flow'} master"),
        sense="min" if (mincost or phase1) else "max",
    )
    for col in columns:
        if phase1:
            lp.add_var(col.var)
        else:
            lp.add_var(col.var, obj=col.cost if mincost else 1)
    arts = []
    if phase1:
        for k in range(len(net.od_pairs)):
            if net.od_pairs[k].demand > 0:
                arts.append((k, lp.add_var(f"art{k}", obj=1)))
    J = net.curve.intervals
    for i in net.station_nodes:
        for j in range(1, J + 1):
            lp.add_var(f"z_{i}_{j}")
    for i in net.station_nodes:
        for j in range(1, J + 1):
            coeffs = {}
            for col in columns:
                q = col.split.get((i, j))
                if q:
                    coeffs[col.var] = q
            if not coeffs:
                continue
            coeffs[f"z_{i}_{j}"] = -net.stations[i].speeds[j - 1]
            lp.add_constraint(f"cap_{i}_{j}", coeffs, "<=", 0)
        lp.add_constraint(
            f"alloc_{i}",
            {f"z_{i}_{j}": Fraction(1) for j in range(1, J + 1)},
            "==",
            net.stations[i].chargers,
        )
    for eid, e in enumerate(net.edges):
        if e.u is None:
            continue
        coeffs = {}
        for col in columns:
            mult = col.edge_use.get(eid)
            if mult:
                coeffs[col.var] = Fraction(mult)
        if coeffs:
            lp.add_constraint(f"edge_{eid}", coeffs, "<=", e.u)
    if mincost or phase1:
        for k in range(len(net.od_pairs)):
            demand = net.od_pairs[k].demand
            coeffs = {col.var: Fraction(1) for col in columns if col.k == k}
            if phase1 and demand > 0:
                coeffs[f"art{k}"] = Fraction(1)
            if coeffs or demand > 0:
                lp.add_constraint(f"dem_{k}", coeffs, ">=", demand)
    return lp


def _master_duals(net: ChargingNetwork, sol, mincost: bool):
    """Duals in the nonnegative orientation used by the pricing constraints."""
    sign = -1 if mincost else 1
    pi = {}
    for i in net.station_nodes:
        for j in range(1, net.curve.intervals + 1):
            pi[(i, j)] = sign * sol.dual(f"cap_{i}_{j}")
    w = {}
    for eid, e in enumerate(net.edges):
        if e.u is not None:
            w[eid] = sign * sol.dual(f"edge_{eid}")
    phi = {k: sol.dual(f"dem_{k}") for k in range(len(net.od_pairs))}
    return pi, w, phi


def _check_unbounded_capacitated(net: ChargingNetwork) -> None:
    """Unbounded iff a zero-charge route over uncapacitated edges fits in L."""
    for k, od in enumerate(net.od_pairs):
        dist = {od.s: Fraction(0)}
        heap = [(Fraction(0), od.s)]
        while heap:
            d, v = heapq.heappop(heap)
            if dist[v] != d:
                continue
            for eid in net.out_edges(v):
                e = net.edges[eid]
                if e.u is not None:
                    continue
                nd = d + e.d
                old = dist.get(e.head)
                if nd <= net.capacity and (old is None or nd < old):
                    dist[e.head] = nd
                    heapq.heappush(heap, (nd, e.head))
        if od.t in dist:
            raise UnboundedFlow([(k, [od.s, od.t])])


def solve_capacitated(
    net: ChargingNetwork,
    problem: str = "max-flow",
    epsilon: Fraction = Fraction(0),
    max_rounds: int = 10_000,
    on_master=None,
) -> FlowSolution:
    """Column generation for the edge-capacitated flow problems, exact arithmetic.

    With epsilon 0 the result is exactly optimal on termination: the final
    master duals satisfy every strategy's dual constraint, certified by the
    exact oracle. Positive epsilon allows stopping once no constraint is
    violated by more than the relative factor (1 + epsilon).
    """
    if problem not in ("max-flow", "min-cost"):
        raise ValueError(f"unknown problem {problem!r}")
    mincost = problem == "min-cost"
    if not mincost:
        _check_unbounded_capacitated(net)
    grid = battery_grid_step(net)
    epsilon = Fraction(epsilon)
    columns: list[_Column] = []
    last_lp: list[LpProblem | None] = [None]

    def add_strategy(strategy: ChargingStrategy) -> None:
        columns.append(_strategy_column(net, len(columns), strategy))

    def run_loop(phase1: bool):
        for _ in range(max_rounds):
            lp = last_lp[0] = _build_master(net, columns, mincost=mincost and not phase1, phase1=phase1)
            try:
                sol = solve_lp(lp, mode="exact")
            except LpInfeasible as exc:  # only possible without demand rows
                raise InfeasibleDemand(exc.certificate) from exc
            if on_master is not None:
                on_master(phase1, sol.objective)
            pi, w, phi = _master_duals(net, sol, mincost=mincost)
            progressed = False
            for k in range(len(net.od_pairs)):
                if mincost:
                    threshold = phi.get(k, Fraction(0))
                    if threshold <= 0:
                        continue
                else:
                    threshold = Fraction(1)
                res = pricing_oracle(
                    net, k, w, pi,
                    include_strategy_cost=mincost and not phase1,
                    grid=grid,
                )
                if res.value is None:
                    continue
                # violated when value < threshold beyond the relative slack
                if res.value * (1 + epsilon) < threshold:
                    add_strategy(res.strategy)
                    progressed = True
            if not progressed:
                return sol
        raise RuntimeError("column generation failed to converge")

    phase1_needed = mincost and any(od.demand > 0 for od in net.od_pairs)
    if phase1_needed:
        sol1 = run_loop(phase1=True)
        if sol1.objective > 0:
            raise InfeasibleDemand(dict(sol1.duals))
    final = run_loop(phase1=False)

    zero = Fraction(0)
    z = {}
    pi, w, phi = _master_duals(net, final, mincost=mincost)
    y = {}
    for i in net.station_nodes:
        for j in range(1, net.curve.intervals + 1):
            z[(i, j)] = final.values.get(f"z_{i}_{j}", zero)
        y[i] = (-1 if mincost else 1) * final.dual(f"alloc_{i}")
    strategies = []
    edge_flow: dict[tuple[int, int], Fraction] = {}
    for col in columns:
        x = final.values.get(col.var, zero)
        if x > 0:
            strategies.append((col.strategy, x))
            for eid, mult in col.edge_use.items():
                key = (col.k, eid)
                edge_flow[key] = edge_flow.get(key, zero) + mult * x
    return FlowSolution(
        problem=problem,
        objective=final.objective,
        edge_flow=edge_flow,
        z=z,
        strategies=strategies,
        pi=pi,
        y=y,
        phi=phi if mincost else {},
        w=w,
        lp=last_lp[0],
        lp_solution=final,
    )


def partition_instance(values: list[int]) -> ChargingNetwork:
    """Chain network on which max flow reaches 2 iff the values admit a partition.

    n values give n gadgets in series: a top arc of consumption z_i and a
    zero-consumption bottom arc, all with capacity 1, joined at zero-speed
    single-charger stations; the battery holds half the total.
    """
    if not values:
        raise NetworkError("partition gadget needs at least one value")
    if any((not isinstance(z, int)) or isinstance(z, bool) or z < 0 for z in values):
        raise NetworkError("partition gadget values must be non-negative integers")
    total = sum(values)
    if total % 2 != 0:
        raise NetworkError(f"values sum to {total}, which is odd: no partition exists")
    if total == 0:
        raise NetworkError("values sum to zero; battery capacity would be empty")
    half = total // 2
    n = len(values)
    labels = ["s"] + [f"v{i}" for i in range(1, n)] + ["t"]
    edges = []
    for idx, z in enumerate(values):
        tail, head = idx, idx + 1
        edges.append(Edge(tail, head, Fraction(z), Fraction(0), Fraction(1)))
        edges.append(Edge(tail, head, Fraction(0), Fraction(0), Fraction(1)))
    stations = {
        i: Station(i, 1, (Fraction(0),), (Fraction(0),), Fraction(0)) for i in range(1, n)
    }
    return ChargingNetwork(
        labels=tuple(labels),
        edges=tuple(edges),
        stations=stations,
        curve=ChargingCurve((Fraction(0), Fraction(half))),
        od_pairs=(OdPair(0, n, Fraction(2)),),
    )
