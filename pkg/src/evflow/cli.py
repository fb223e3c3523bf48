"""Command-line front end.

Results go to stdout as canonical JSON (or DOT/LP text when asked);
diagnostics go to stderr. Exit codes: 0 success, 1 infeasible / unbounded /
violated assumption, 2 input error, 3 internal error.
"""

from __future__ import annotations

import argparse
import sys

from .augment import InfeasibleOdPair, build_augmented, compute_level_sets, detect_unbounded
from .capacitated import partition_instance, solve_capacitated
from .closure import all_pairs_shortest, build_auxiliary, check_assumption1
from .emit import (
    aug_to_dict,
    aug_to_dot,
    aux_to_dict,
    aux_to_dot,
    dump_json,
    flow_to_dict,
    strategy_to_dict,
)
from .flows import AssumptionViolated, InfeasibleDemand, UnboundedFlow, solve_maxflow, solve_mincost
from .model import NetworkError, load_network_path, rational
from .oracle import brute_flow, brute_single_opt, enumerate_strategies
from .routing import route_single, strategy_cost

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3

NETWORK_SCHEMA_HELP = """\
Network files are UTF-8 JSON with all numbers as exact decimal (or 'p/q')
strings. Top-level keys:
  L           battery capacity
  thresholds  charging-curve grid, strictly increasing from "0" to L
  nodes       array of node labels
  edges       array of {tail, head, d, ell, u?} (u omitted = uncapacitated)
  stations    array of {node, chargers, speeds[], prices[], occupancy_price};
              several entries on one node become split charger-type nodes
  od_pairs    array of {s, t, demand?}
"""


class _Fail(Exception):
    def __init__(self, code: int, payload: dict):
        self.code = code
        self.payload = payload


def _load(path):
    try:
        return load_network_path(path)
    except FileNotFoundError:
        raise _Fail(EXIT_INPUT, {"status": "error", "message": f"no such file: {path}"})
    except NetworkError as exc:
        raise _Fail(EXIT_INPUT, {"status": "error", "message": str(exc)})


def _pipeline(net):
    mc = all_pairs_shortest(net)
    aux = build_auxiliary(net, mc)
    sets = compute_level_sets(aux)
    graph = build_augmented(aux, sets)
    return mc, aux, graph


def cmd_validate(args) -> int:
    net = _load(args.network)
    mc = all_pairs_shortest(net)
    unbounded = detect_unbounded(net, mc)
    print(
        dump_json(
            {
                "status": "ok",
                "nodes": len(net.labels),
                "edges": len(net.edges),
                "stations": len(net.stations),
                "intervals": net.curve.intervals,
                "od_pairs": len(net.od_pairs),
                "bounded": unbounded.bounded,
            }
        ),
        end="",
    )
    return EXIT_OK


def cmd_assumption(args) -> int:
    net = _load(args.network)
    report = check_assumption1(net)
    if report.holds:
        print(dump_json({"status": "holds"}), end="")
        return EXIT_OK
    u, v = report.pair
    metric, along, best = report.witness
    print(
        dump_json(
            {
                "status": "violated",
                "pair": [net.labels[u], net.labels[v]],
                "witness": {"metric": metric, "along_other_optimum": along, "minimum": best},
            }
        ),
        end="",
    )
    return EXIT_INFEASIBLE


def cmd_augment(args) -> int:
    net = _load(args.network)
    mc, aux, graph = _pipeline(net)
    if args.aux:
        print(aux_to_dot(aux) if args.emit == "dot" else dump_json(aux_to_dict(aux)), end="")
    else:
        print(aug_to_dot(graph) if args.emit == "dot" else dump_json(aug_to_dict(graph)), end="")
    return EXIT_OK


def cmd_route(args) -> int:
    net = _load(args.network)
    if not 0 <= args.od < len(net.od_pairs):
        raise _Fail(EXIT_INPUT, {"status": "error", "message": f"od pair {args.od} out of range"})
    report = check_assumption1(net)
    if not report.holds:
        u, v = report.pair
        raise _Fail(
            EXIT_INFEASIBLE,
            {
                "status": "assumption-violated",
                "pair": [net.labels[u], net.labels[v]],
            },
        )
    mc, aux, graph = _pipeline(net)
    try:
        strategy = route_single(graph, args.od)
    except InfeasibleOdPair as exc:
        raise _Fail(EXIT_INFEASIBLE, {"status": "infeasible", "message": str(exc)})
    out = strategy_to_dict(net, strategy)
    out["status"] = "optimal"
    if args.oracle:
        cost, _ = brute_single_opt(net, enumerate_strategies(net, args.od))
        if cost != strategy_cost(net, strategy):
            raise _Fail(
                EXIT_INTERNAL,
                {
                    "status": "oracle-mismatch",
                    "router_cost": str(strategy_cost(net, strategy)),
                    "oracle_cost": str(cost),
                },
            )
        out["oracle"] = "agree"
    print(dump_json(out), end="")
    return EXIT_OK


def _flow_command(args, problem: str) -> int:
    net = _load(args.network)
    try:
        if args.edge_caps:
            sol = solve_capacitated(net, problem, epsilon=rational(args.epsilon, "epsilon"))
        elif problem == "max-flow":
            mc, aux, graph = _pipeline(net)
            sol = solve_maxflow(graph, mode=args.mode, tol=args.tol)
        else:
            mc, aux, graph = _pipeline(net)
            sol = solve_mincost(graph, mode=args.mode, tol=args.tol)
    except UnboundedFlow as exc:
        raise _Fail(
            EXIT_INFEASIBLE,
            {
                "status": "unbounded",
                "pairs": [
                    {"od_pair": k, "witness_path": [net.labels[v] for v in path]}
                    for k, path in exc.pairs
                ],
            },
        )
    except AssumptionViolated as exc:
        raise _Fail(EXIT_INFEASIBLE, {"status": "assumption-violated", "message": str(exc)})
    except InfeasibleDemand as exc:
        raise _Fail(EXIT_INFEASIBLE, {"status": "infeasible", "message": str(exc)})
    if args.emit == "lp":
        if sol.lp is None:
            raise _Fail(EXIT_INTERNAL, {"status": "error", "message": "no LP retained"})
        print(sol.lp.to_lp_text(), end="")
        return EXIT_OK
    out = flow_to_dict(net, sol)
    if args.oracle:
        universes = {k: enumerate_strategies(net, k) for k in range(len(net.od_pairs))}
        want = brute_flow(net, universes, problem, edge_caps=args.edge_caps)
        if want != sol.objective:
            raise _Fail(
                EXIT_INTERNAL,
                {"status": "oracle-mismatch", "lp": str(sol.objective), "oracle": str(want)},
            )
        out["oracle"] = "agree"
    print(dump_json(out), end="")
    return EXIT_OK


def cmd_maxflow(args) -> int:
    return _flow_command(args, "max-flow")


def cmd_mincost(args) -> int:
    return _flow_command(args, "min-cost")


def cmd_gen_partition(args) -> int:
    try:
        values = [int(x) for x in args.values.split(",") if x.strip() != ""]
    except ValueError:
        raise _Fail(EXIT_INPUT, {"status": "error", "message": f"bad values: {args.values!r}"})
    try:
        net = partition_instance(values)
    except NetworkError as exc:
        raise _Fail(EXIT_INPUT, {"status": "error", "message": str(exc)})
    text = dump_json(net.to_dict())
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
        print(dump_json({"status": "ok", "written": args.output}), end="")
    else:
        print(text, end="")
    return EXIT_OK


def cmd_report(args) -> int:
    from .report import write_report

    net = _load(args.network)
    mc, aux, graph = _pipeline(net)
    capacitated = any(e.u is not None for e in net.edges)
    maxflow = mincost = None
    try:
        if args.maxflow:
            maxflow = solve_capacitated(net, "max-flow") if capacitated else solve_maxflow(graph)
        if args.mincost:
            mincost = solve_capacitated(net, "min-cost") if capacitated else solve_mincost(graph)
    except (UnboundedFlow, AssumptionViolated, InfeasibleDemand) as exc:
        raise _Fail(EXIT_INFEASIBLE, {"status": "error", "message": str(exc)})
    written = write_report(net, graph, args.outdir, maxflow=maxflow, mincost=mincost)
    print(dump_json({"status": "ok", "written": written}), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evflow",
        description="EV charging-network analysis: routing, max flow, min-cost flow.",
        epilog=NETWORK_SCHEMA_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(fn=fn)
        return p

    p = add("validate", cmd_validate, help="load a network file and report its shape")
    p.add_argument("network")

    p = add("assumption", cmd_assumption, help="check the shared-shortest-path assumption")
    p.add_argument("network")

    p = add("augment", cmd_augment, help="emit the charge-augmented network")
    p.add_argument("network")
    p.add_argument("--emit", choices=["json", "dot"], default="json")
    p.add_argument("--aux", action="store_true", help="emit the auxiliary station-copy network instead")

    p = add("route", cmd_route, help="optimal single-EV charging strategy")
    p.add_argument("network")
    p.add_argument("--od", type=int, default=0, help="od pair index (default 0)")
    p.add_argument("--oracle", action="store_true", help="cross-check against brute force")

    for name, fn in (("maxflow", cmd_maxflow), ("mincost", cmd_mincost)):
        p = add(name, fn, help=f"solve the {name} problem")
        p.add_argument("network")
        p.add_argument("--edge-caps", action="store_true", help="respect edge capacities (column generation)")
        p.add_argument("--epsilon", default="0", help="relative pricing slack for --edge-caps (default 0, exact)")
        p.add_argument("--mode", choices=["exact", "float"], default="exact")
        p.add_argument("--tol", type=float, default=1e-9, help="float-mode tolerance")
        p.add_argument("--emit", choices=["json", "lp"], default="json")
        p.add_argument("--oracle", action="store_true", help="cross-check against brute force")

    p = add("gen-partition", cmd_gen_partition, help="generate a PARTITION reduction network")
    p.add_argument("--values", required=True, help="comma-separated integers, e.g. 3,3,1,1")
    p.add_argument("-o", "--output", help="write the network here instead of stdout")

    p = add("report", cmd_report, help="render figures and CSV summaries")
    p.add_argument("network")
    p.add_argument("--outdir", required=True)
    p.add_argument("--maxflow", action="store_true", help="include a max-flow solution")
    p.add_argument("--mincost", action="store_true", help="include a min-cost solution")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except _Fail as fail:
        print(dump_json(fail.payload), end="")
        print(fail.payload.get("message", fail.payload.get("status", "error")), file=sys.stderr)
        return fail.code
    except NetworkError as exc:
        print(dump_json({"status": "error", "message": str(exc)}), end="")
        print(str(exc), file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # pragma: no cover - defensive
        print(dump_json({"status": "internal-error", "message": str(exc)}), end="")
        import traceback

        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
