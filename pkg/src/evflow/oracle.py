"""Brute-force references for tests: exhaustive strategies and finite LPs.

Everything here recomputes from first principles — simple-path enumeration,
direct battery simulation, an independent cost accumulator — so agreement
with the optimized modules is meaningful. Only usable at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .lp import LpProblem, solve_lp
from .model import ChargingNetwork
from .routing import ChargingStrategy


class UniverseOverflow(RuntimeError):
    """Enumeration exceeded its caps; shrink the instance."""


@dataclass(frozen=True)
class StrategyUniverse:
    k: int
    strategies: tuple[ChargingStrategy, ...]


def _departure_candidates(
    net: ChargingNetwork, b: Fraction, future_dists: list[Fraction], last_dist: Fraction
) -> list[Fraction]:
    """Extreme departure levels from a station arrived at with battery b.

    future_dists holds cumulative battery distances to each later station on
    the path; last_dist to the destination. Extremes: charge nothing, charge
    to an interval top, enter some later station at an interval bottom, or
    arrive at the destination empty. The destination is the only anchor a
    vehicle at the final station may aim for (overcharging toward it is
    dominated).
    """
    cap = net.capacity
    if not future_dists:
        dep = max(b, last_dist)
        return [dep] if dep <= cap else []
    cands = {b}
    for alpha in net.curve.thresholds:
        if alpha > b:
            cands.add(alpha)
        for dist in future_dists:
            cands.add(alpha + dist)
    cands.add(last_dist)
    next_d = future_dists[0]
    return sorted(c for c in cands if b <= c <= cap and c >= next_d)


def _charge_ok(net: ChargingNetwork, i: int, b_from: Fraction, b_to: Fraction) -> bool:
    """A charge may not cross a zero-speed interval."""
    if b_to == b_from:
        return True
    st = net.stations[i]
    for j in range(1, net.curve.intervals + 1):
        lo, hi = net.curve.lower(j), net.curve.upper(j)
        if min(b_to, hi) > max(b_from, lo) and st.speeds[j - 1] == 0:
            return False
    return True


def _simple_paths(net: ChargingNetwork, s: int, t: int, max_len: int, cap: int):
    """All simple paths as edge-id lists, DFS in edge-id order."""
    paths: list[list[int]] = []
    stack_edges: list[int] = []
    on_path = {s}

    def dfs(v: int):
        if len(paths) > cap:
            raise UniverseOverflow(f"more than {cap} simple paths")
        if v == t:
            paths.append(list(stack_edges))
            return
        if len(stack_edges) >= max_len:
            return
        for eid in net.out_edges(v):
            head = net.edges[eid].head
            if head in on_path:
                continue
            stack_edges.append(eid)
            on_path.add(head)
            dfs(head)
            on_path.remove(head)
            stack_edges.pop()

    dfs(s)
    return paths


def _grid_step(net: ChargingNetwork) -> Fraction:
    """gcd of edge consumptions and threshold gaps (recomputed independently)."""
    import math

    vals = [net.capacity] + [e.d for e in net.edges if e.d]
    a = net.curve.thresholds
    vals += [a[j + 1] - a[j] for j in range(len(a) - 1)]
    den = 1
    for v in vals:
        den = den * v.denominator // math.gcd(den, v.denominator)
    num = 0
    for v in vals:
        num = math.gcd(num, v.numerator * (den // v.denominator))
    return Fraction(num, den) if num else net.capacity


def enumerate_strategies(
    net: ChargingNetwork,
    k: int,
    max_path_len: int = 12,
    max_count: int = 200_000,
    fine_grid: bool = False,
) -> StrategyUniverse:
    """Every extreme charging strategy for od pair k, within caps.

    Per simple path, charging decisions branch over the extreme departure
    levels at every on-path station; infeasible branches are pruned by direct
    battery simulation. Deterministic order. Raises UniverseOverflow when a
    cap is hit. With fine_grid, departures instead range over every multiple
    of the instance's battery grid step, which independently confirms that no
    off-pattern charge vector beats the extreme ones.
    """
    od = net.od_pairs[k]
    cap = net.capacity
    out: list[ChargingStrategy] = []
    step = _grid_step(net) if fine_grid else None

    for path_edges in _simple_paths(net, od.s, od.t, max_path_len, max_count):
        nodes = [od.s] + [net.edges[eid].head for eid in path_edges]
        # split the path at charging stops: stations strictly inside the path
        stops = [pos for pos, v in enumerate(nodes) if v in net.stations]
        # battery consumed between consecutive decision points
        def seg(a: int, b: int) -> Fraction:
            return sum((net.edges[e].d for e in path_edges[a:b]), Fraction(0))

        results: list[tuple[Fraction, ...]] = []

        def recurse(idx: int, b: Fraction, acc: tuple[Fraction, ...]):
            if len(out) + len(results) > max_count:
                raise UniverseOverflow(f"more than {max_count} strategies")
            if idx == len(stops):
                results.append(acc)
                return
            pos = stops[idx]
            future = [seg(pos, p) for p in stops[idx + 1:]]
            last_dist = seg(pos, len(nodes) - 1)
            d_next = future[0] if future else last_dist
            if step is None:
                candidates = _departure_candidates(net, b, future, last_dist)
            else:
                candidates = []
                dep = b
                while dep <= cap:
                    if dep >= d_next:
                        candidates.append(dep)
                    dep += step
            for dep in candidates:
                if not _charge_ok(net, nodes[pos], b, dep):
                    continue
                recurse(idx + 1, dep - d_next, acc + (dep - b,))

        if stops:
            first_arrival = cap - seg(0, stops[0])
            if first_arrival < 0:
                continue
            recurse(0, first_arrival, ())
            seen: set[tuple] = set()
            for deps in results:
                if deps in seen:
                    continue
                seen.add(deps)
                charges = [Fraction(0)] * len(nodes)
                for idx, q in zip(stops, deps):
                    charges[idx] = q
                out.append(
                    ChargingStrategy(
                        k=k, path=tuple(nodes), charges=tuple(charges), edge_ids=tuple(path_edges)
                    )
                )
        else:
            if seg(0, len(nodes) - 1) <= cap:
                out.append(
                    ChargingStrategy(
                        k=k,
                        path=tuple(nodes),
                        charges=tuple(Fraction(0) for _ in nodes),
                        edge_ids=tuple(path_edges),
                    )
                )
    return StrategyUniverse(k=k, strategies=tuple(out))


def oracle_cost(net: ChargingNetwork, strategy: ChargingStrategy) -> Fraction | None:
    """Independent strategy cost: time plus interval-split charging charges.

    Returns None for strategies that are infeasible (battery bound breached
    or charging across a zero-speed interval).
    """
    cap = net.capacity
    total = Fraction(0)
    level = cap
    for pos, v in enumerate(strategy.path):
        if level < 0:
            return None
        q = strategy.charges[pos]
        if q < 0 or (q > 0 and v not in net.stations):
            return None
        if q > 0:
            b = level
            target = level + q
            if target > cap:
                return None
            st = net.stations[v]
            while b < target:
                j = net.curve.interval_of(b)
                top = min(net.curve.upper(j), target)
                r = st.speeds[j - 1]
                if r == 0:
                    return None
                total += (st.prices[j - 1] + (1 + st.occupancy_price) / r) * (top - b)
                b = top
            level = target
        if pos < len(strategy.path) - 1:
            e = net.edges[strategy.edge_ids[pos]]
            total += e.ell
            level -= e.d
    if level < 0:
        return None
    return total


def brute_single_opt(
    net: ChargingNetwork, universe: StrategyUniverse
) -> tuple[Fraction, ChargingStrategy]:
    """Exact minimum cost over the universe; ties keep the first enumerated."""
    best = None
    best_strategy = None
    for strategy in universe.strategies:
        c = oracle_cost(net, strategy)
        if c is None:
            continue
        if best is None or c < best:
            best = c
            best_strategy = strategy
    if best is None:
        raise ValueError("universe holds no feasible strategy")
    return best, best_strategy


def _oracle_split(net: ChargingNetwork, strategy: ChargingStrategy) -> dict[tuple[int, int], Fraction]:
    split: dict[tuple[int, int], Fraction] = {}
    level = net.capacity
    for pos, v in enumerate(strategy.path):
        q = strategy.charges[pos]
        if q > 0:
            b = level
            target = level + q
            while b < target:
                j = net.curve.interval_of(b)
                top = min(net.curve.upper(j), target)
                split[(v, j)] = split.get((v, j), Fraction(0)) + top - b
                b = top
            level = target
        if pos < len(strategy.path) - 1:
            level -= net.edges[strategy.edge_ids[pos]].d
    return split


def brute_flow(
    net: ChargingNetwork,
    universes: dict[int, StrategyUniverse],
    problem: str = "max-flow",
    edge_caps: bool = False,
) -> Fraction:
    """Optimum of the finite LP over enumerated strategies, exact arithmetic.

    problem 'max-flow' maximizes total flow; 'min-cost' meets od demands at
    minimum cost. With edge_caps, per-edge capacity rows are added.
    """
    mincost = problem == "min-cost"
    lp = LpProblem(name=f"brute {problem}", sense="min" if mincost else "max")

    columns = []  # (var, k, split, cost, edge multiset)
    seen: dict[tuple, int] = {}
    for k, universe in sorted(universes.items()):
        for strategy in universe.strategies:
            cost = oracle_cost(net, strategy)
            if cost is None:
                continue
            split = _oracle_split(net, strategy)
            qkey = tuple(sorted(split.items()))
            ekey = tuple(sorted(strategy.edge_ids)) if edge_caps else ()
            key = (k, qkey, ekey)
            if key in seen:
                idx = seen[key]
                if mincost and cost < columns[idx][3]:
                    columns[idx] = columns[idx][:3] + (cost,) + columns[idx][4:]
                    lp.objective[columns[idx][0]] = cost
                continue
            seen[key] = len(columns)
            var = f"x{len(columns)}"
            lp.add_var(var, obj=cost if mincost else 1)
            columns.append((var, k, split, cost, strategy.edge_ids))

    for i in net.station_nodes:
        for j in range(1, net.curve.intervals + 1):
            lp.add_var(f"z_{i}_{j}")
    for i in net.station_nodes:
        for j in range(1, net.curve.intervals + 1):
            coeffs = {}
            for var, _, split, _, _ in columns:
                q = split.get((i, j))
                if q:
                    coeffs[var] = q
            if not coeffs:
                continue
            coeffs[f"z_{i}_{j}"] = -net.stations[i].speeds[j - 1]
            lp.add_constraint(f"cap_{i}_{j}", coeffs, "<=", 0)
        lp.add_constraint(
            f"alloc_{i}",
            {f"z_{i}_{j}": Fraction(1) for j in range(1, net.curve.intervals + 1)},
            "==",
            net.stations[i].chargers,
        )
    if edge_caps:
        for eid, e in enumerate(net.edges):
            if e.u is None:
                continue
            coeffs = {}
            for var, _, _, _, eids in columns:
                mult = sum(1 for x in eids if x == eid)
                if mult:
                    coeffs[var] = Fraction(mult)
            if coeffs:
                lp.add_constraint(f"edge_{eid}", coeffs, "<=", e.u)
            # empty rows (0 <= u) hold trivially
    if mincost:
        for k in universes:
            coeffs = {var: Fraction(1) for var, kk, _, _, _ in columns if kk == k}
            demand = net.od_pairs[k].demand
            if coeffs or demand > 0:
                lp.add_constraint(f"dem_{k}", coeffs, ">=", demand)

    sol = solve_lp(lp, mode="exact")
    return sol.objective
