"""Report rendering: matplotlib figures plus delimited summaries.

Writes, into an output directory: the charge-augmented network drawn in the
battery-level plane (charging arcs red, station-copy boundary arcs gray
dashed, travel arcs black), the stations' charging-speed step curves, an
optional strategy-flow bar chart, and CSV files with the level sets and the
strategies. Figures are rendered headless.
"""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .augment import AugmentedGraph, EdgeKind, node_label
from .emit import EDGE_COLORS
from .flows import FlowSolution
from .model import ChargingNetwork, rational_str
from .routing import strategy_cost


def _positions(graph: AugmentedGraph):
    """Layout: one column per station copy, battery level on the y axis."""
    net = graph.net
    J = net.curve.intervals
    stations = net.station_nodes
    xcol = {}
    for si, i in enumerate(stations):
        for j in range(1, J + 1):
            xcol[(i, j)] = 1 + si * J + (j - 1)
    width = 1 + len(stations) * J
    pos = {}
    cap = float(net.capacity)
    for n in graph.nodes:
        if n[0] == "copy":
            _, i, j, b = n
            pos[n] = (xcol[(i, j)], float(b))
        elif n[0] == "src":
            pos[n] = (0.0, cap * (1 + 0.08 * n[1]))
        else:
            pos[n] = (float(width), -0.08 * cap * n[1])
    return pos


def render_augmented(graph: AugmentedGraph, path: str) -> None:
    net = graph.net
    pos = _positions(graph)
    fig, ax = plt.subplots(figsize=(max(6, 2 + 2 * len(net.station_nodes) * net.curve.intervals), 6))
    for e in graph.edges:
        x1, y1 = pos[e.tail]
        x2, y2 = pos[e.head]
        color = EDGE_COLORS[e.kind]
        style = "--" if e.kind is EdgeKind.CHAIN else "-"
        rad = 0.25 if e.kind is EdgeKind.CHARGE else 0.08
        ax.annotate(
            "",
            xy=(x2, y2),
            xytext=(x1, y1),
            arrowprops=dict(
                arrowstyle="-|>",
                color=color,
                linestyle=style,
                connectionstyle=f"arc3,rad={rad}",
                shrinkA=12,
                shrinkB=12,
            ),
        )
    for n, (x, y) in pos.items():
        ax.plot([x], [y], "o", color="white", markeredgecolor="black", markersize=26, zorder=3)
        ax.annotate(node_label(net, n), (x, y), ha="center", va="center", fontsize=7, zorder=4)
    ax.set_xlabel("station copies")
    ax.set_ylabel("battery level")
    ax.set_title("charge-augmented network")
    ax.set_xticks([])
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_charging_curves(net: ChargingNetwork, path: str) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    thresholds = [float(a) for a in net.curve.thresholds]
    for i in net.station_nodes:
        st = net.stations[i]
        xs, ys = [], []
        for j in range(net.curve.intervals):
            xs.extend([thresholds[j], thresholds[j + 1]])
            ys.extend([float(st.speeds[j])] * 2)
        ax.plot(xs, ys, label=net.labels[i], drawstyle="steps-post", alpha=0.85)
    ax.set_xlabel("battery level")
    ax.set_ylabel("charging speed")
    ax.set_title("charging curves")
    if net.station_nodes:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_flow(net: ChargingNetwork, sol: FlowSolution, path: str) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    labels = []
    values = []
    for strategy, x in sol.strategies:
        labels.append("-".join(net.labels[v] for v in strategy.path))
        values.append(float(x))
    if values:
        ax.barh(range(len(values)), values, color="tab:blue", alpha=0.8)
        ax.set_yticks(range(len(values)))
        ax.set_yticklabels(labels, fontsize=7)
    ax.set_xlabel("flow")
    ax.set_title(f"{sol.problem} strategies (objective {sol.objective})")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_level_sets_csv(graph: AugmentedGraph, path: str) -> None:
    net = graph.net
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["station", "interval", "lower", "upper", "b_in", "b_out"])
        for (i, j) in sorted(graph.sets.b_in):
            out.writerow(
                [
                    net.labels[i],
                    j,
                    rational_str(net.curve.lower(j)),
                    rational_str(net.curve.upper(j)),
                    " ".join(rational_str(b) for b in graph.sets.b_in[(i, j)]),
                    " ".join(rational_str(b) for b in graph.sets.b_out[(i, j)]),
                ]
            )


def write_strategies_csv(net: ChargingNetwork, sol: FlowSolution, path: str) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["od_pair", "path", "charges", "flow", "unit_cost"])
        for strategy, x in sol.strategies:
            charges = ";".join(
                f"{net.labels[strategy.path[pos]]}={rational_str(q)}"
                for pos, q in enumerate(strategy.charges)
                if q > 0
            )
            out.writerow(
                [
                    strategy.k,
                    "-".join(net.labels[v] for v in strategy.path),
                    charges,
                    rational_str(x),
                    rational_str(strategy_cost(net, strategy)),
                ]
            )


def write_report(
    net: ChargingNetwork,
    graph: AugmentedGraph,
    outdir: str,
    maxflow: FlowSolution | None = None,
    mincost: FlowSolution | None = None,
) -> list[str]:
    """Render all figures and CSVs into outdir; returns the written paths."""
    os.makedirs(outdir, exist_ok=True)
    written = []

    def emit(name, fn, *args):
        target = os.path.join(outdir, name)
        fn(*args, target)
        written.append(target)

    emit("augmented_network.png", render_augmented, graph)
    emit("charging_curves.png", render_charging_curves, net)
    emit("level_sets.csv", write_level_sets_csv, graph)
    for tag, sol in (("maxflow", maxflow), ("mincost", mincost)):
        if sol is None:
            continue
        emit(f"{tag}_strategies.png", render_flow, net, sol)
        emit(f"{tag}_strategies.csv", write_strategies_csv, net, sol)
    return written
