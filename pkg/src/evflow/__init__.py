"""EV charging-network modeling and flow optimization.

Pipeline: load_network -> all_pairs_shortest -> build_auxiliary ->
compute_level_sets -> build_augmented, then route_single / solve_maxflow /
solve_mincost on the augmented graph, or solve_capacitated directly on the
network when edges carry capacities.
"""

from .augment import (
    AugmentedGraph,
    BatteryLevelSets,
    InfeasibleOdPair,
    UnboundedReport,
    build_augmented,
    compute_level_sets,
    detect_unbounded,
)
from .capacitated import partition_instance, pricing_oracle, solve_capacitated
from .closure import (
    AssumptionReport,
    AuxiliaryNetwork,
    MetricClosure,
    all_pairs_shortest,
    build_auxiliary,
    check_assumption1,
)
from .flows import (
    AssumptionViolated,
    FlowSolution,
    InfeasibleDemand,
    UnboundedFlow,
    build_maxflow_lp,
    build_mincost_lp,
    decompose_flow,
    solve_maxflow,
    solve_mincost,
    verify_flow,
)
from .lp import LpInfeasible, LpProblem, LpSolution, LpUnbounded, solve_lp
from .model import (
    ChargingCurve,
    ChargingNetwork,
    Edge,
    NetworkError,
    OdPair,
    Station,
    load_network,
    load_network_path,
    merge_threshold_grids,
    network_from_dict,
    split_charger_types,
)
from .oracle import StrategyUniverse, brute_flow, brute_single_opt, enumerate_strategies
from .routing import (
    ChargingStrategy,
    FeasibilityError,
    reconstruct_strategy,
    route_single,
    strategy_cost,
    unit_cost,
)

__version__ = "0.1.0"
