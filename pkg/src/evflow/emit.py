"""DOT/JSON emission for graphs and solutions.

All JSON output is canonical: keys sorted, rationals as exact 'p' or 'p/q'
strings, lists in deterministic construction order. Identical inputs and
flags therefore produce byte-identical output.
"""

from __future__ import annotations

import json
from fractions import Fraction

from .augment import AugmentedGraph, EdgeKind, node_label
from .closure import AuxiliaryNetwork
from .flows import FlowSolution
from .model import ChargingNetwork, rational_str
from .routing import (
    ChargingStrategy,
    strategy_charge_time,
    strategy_cost,
    strategy_drive_time,
    strategy_money,
)

EDGE_COLORS = {EdgeKind.CHARGE: "red", EdgeKind.CHAIN: "gray", EdgeKind.TRAVEL: "black"}


def jsonable(value):
    """Recursively convert Fractions to exact strings for JSON dumping."""
    if isinstance(value, Fraction):
        return rational_str(value)
    if isinstance(value, float):
        return value
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    return value


def dump_json(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"


def aux_to_dot(aux: AuxiliaryNetwork) -> str:
    net = aux.net
    lines = ["digraph auxiliary {", "  rankdir=LR;"]

    def name(n):
        if n[0] == "copy":
            return f'"({net.labels[n[1]]},{n[2]})"'
        od = net.od_pairs[n[1]]
        return f'"{net.labels[od.s if n[0] == "src" else od.t]}"'

    for n in aux.nodes:
        shape = "box" if n[0] == "copy" else "circle"
        lines.append(f"  {name(n)} [shape={shape}];")
    for e in aux.edges:
        lines.append(f'  {name(e.tail)} -> {name(e.head)} [label="{e.d}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def aux_to_dict(aux: AuxiliaryNetwork) -> dict:
    net = aux.net
    copies = []
    for n in aux.copy_nodes():
        _, i, j = n
        lo, hi = aux.bounds(n)
        copies.append(
            {
                "station": net.labels[i],
                "interval": j,
                "lower": lo,
                "upper": hi,
                "unit_cost": aux.unit_cost(n),
            }
        )
    def name(n):
        if n[0] == "copy":
            return f"({net.labels[n[1]]},{n[2]})"
        od = net.od_pairs[n[1]]
        return net.labels[od.s if n[0] == "src" else od.t]

    return {
        "L": net.capacity,
        "thresholds": list(net.curve.thresholds),
        "nodes": [name(n) for n in aux.nodes],
        "edges": [
            {"tail": name(e.tail), "head": name(e.head), "d": e.d, "ell": e.ell}
            for e in aux.edges
        ],
        "copies": copies,
    }


def aug_to_dot(graph: AugmentedGraph) -> str:
    net = graph.net
    lines = ["digraph charge_augmented {", "  rankdir=LR;"]
    for n in graph.nodes:
        shape = "box" if n[0] == "copy" else "circle"
        lines.append(f'  "{node_label(net, n)}" [shape={shape}];')
    for e in graph.edges:
        color = EDGE_COLORS[e.kind]
        style = ", style=dashed" if e.kind is EdgeKind.CHAIN else ""
        label = str(e.lam) if e.kind is EdgeKind.CHARGE else str(e.d)
        lines.append(
            f'  "{node_label(net, e.tail)}" -> "{node_label(net, e.head)}"'
            f' [color={color}, label="{label}"{style}];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def aug_to_dict(graph: AugmentedGraph) -> dict:
    net = graph.net
    return {
        "nodes": [node_label(net, n) for n in graph.nodes],
        "edges": [
            {
                "tail": node_label(net, e.tail),
                "head": node_label(net, e.head),
                "kind": e.kind.value,
                "lam": e.lam,
                "gamma": e.gamma,
                "d": e.d,
                "ell": e.ell,
            }
            for e in graph.edges
        ],
        "level_sets": {
            f"({net.labels[i]},{j})": {
                "b_in": list(graph.sets.b_in[(i, j)]),
                "b_out": list(graph.sets.b_out[(i, j)]),
            }
            for (i, j) in sorted(graph.sets.b_in)
        },
    }


def strategy_to_dict(net: ChargingNetwork, strategy: ChargingStrategy) -> dict:
    charges: dict[str, Fraction] = {}
    for pos, q in enumerate(strategy.charges):
        if q > 0:
            lab = net.labels[strategy.path[pos]]
            charges[lab] = charges.get(lab, Fraction(0)) + q
    return {
        "od_pair": strategy.k,
        "path": [net.labels[v] for v in strategy.path],
        "charges": charges,
        "cost": strategy_cost(net, strategy),
        "drive_time": strategy_drive_time(net, strategy),
        "charge_time": strategy_charge_time(net, strategy),
        "money": strategy_money(net, strategy),
    }


def flow_to_dict(net: ChargingNetwork, sol: FlowSolution) -> dict:
    strategies = []
    for strategy, x in sol.strategies:
        d = strategy_to_dict(net, strategy)
        d["flow"] = x
        strategies.append(d)
    z = {}
    for (i, j), v in sorted(sol.z.items()):
        z.setdefault(net.labels[i], {})[str(j)] = v
    duals = {
        "pi": {f"{net.labels[i]},{j}": v for (i, j), v in sorted(sol.pi.items())},
        "y": {net.labels[i]: v for i, v in sorted(sol.y.items())},
    }
    if sol.phi:
        duals["phi"] = {str(k): v for k, v in sorted(sol.phi.items())}
    if sol.w:
        duals["w"] = {str(eid): v for eid, v in sorted(sol.w.items())}
    return {
        "status": "optimal",
        "problem": sol.problem,
        "objective": sol.objective,
        "strategies": strategies,
        "z": z,
        "duals": duals,
        "dropped_cycles": sol.dropped_cycles,
    }
