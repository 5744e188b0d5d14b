"""Multi-informed tree search for optimal path planning in box-bounded spaces."""
from .collision import CheckCounters, CollisionChecker, SparseCheckConfig, refine_sparse, sparse_check_count
from .phs import ProlateHyperspheroid, build_phs
from .planner import (
    MITStar,
    PlannerConfig,
    PlanResult,
    RRTConnect,
    SolutionEvent,
    solve_mitstar,
    solve_rrt_connect,
    variant_config,
)
from .search import EisState, RggConfig, SearchGraph, rewire_radius, update_eis
from .space import AabbObstacle, Path, ProblemDef, make_empty, make_scenario, path_cost
from .validation import ConfigError, InvalidInputError

__all__ = [
    "AabbObstacle",
    "CheckCounters",
    "CollisionChecker",
    "ConfigError",
    "EisState",
    "InvalidInputError",
    "MITStar",
    "Path",
    "PlanResult",
    "PlannerConfig",
    "ProblemDef",
    "ProlateHyperspheroid",
    "RRTConnect",
    "RggConfig",
    "SearchGraph",
    "SolutionEvent",
    "SparseCheckConfig",
    "build_phs",
    "make_empty",
    "make_scenario",
    "path_cost",
    "refine_sparse",
    "rewire_radius",
    "solve_mitstar",
    "solve_rrt_connect",
    "sparse_check_count",
    "update_eis",
    "variant_config",
]
