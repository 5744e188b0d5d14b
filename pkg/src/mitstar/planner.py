"""The anytime planner loop, its ablation variants and an RRT-Connect baseline.

Budgets are measured by a clock. ``WallClock`` reads real time. The default
``WorkClock`` charges a fixed cost per counted operation (point checks, graph
edges, queue operations, samples), so a run's trace, including its event times,
is a pure function of its seed.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, fields
from typing import Callable

import numpy as np

from .phs import InfeasibleDiameterError
from .collision import DEFAULT_FULL_RESOLUTION, CheckCounters, CollisionChecker, SparseCheckConfig
from .sampling import SamplerConfig, SampleContext, sample_adaptive_batch, sample_uniform, union_measure
from .search import COLLIDED, FOUND, EisState, RggConfig, SearchGraph
from .space import Path, ProblemDef
from .validation import ConfigError

INITIAL, IMPROVED = "initial", "improved"

RRT_MAX_EDGE = {2: 0.3, 4: 0.5, 8: 1.25, 16: 3.0}
RRT_GOAL_BIAS = 0.05


# -- clocks --------------------------------------------------------------------


@dataclass(frozen=True)
class WorkCostModel:
    """Seconds charged per counted operation. The rates model a compiled
    implementation in which dense point checks dominate the run time."""

    point: float = 1.0e-7
    full_check: float = 1.0e-6
    sparse_check: float = 2.0e-7
    sample: float = 1.0e-6
    graph_edge: float = 5.0e-7
    queue_op: float = 2.0e-7
    reverse_edge: float = 5.0e-8
    nn_query: float = 2.0e-6
    batch: float = 1.0e-4

    def seconds(self, c: CheckCounters) -> float:
        return (
            c.points * self.point
            + c.full_checks * self.full_check
            + c.sparse_checks * self.sparse_check
            + c.samples * self.sample
            + c.graph_edges * self.graph_edge
            + c.queue_ops * self.queue_op
            + c.reverse_edges * self.reverse_edge
            + c.nn_queries * self.nn_query
            + c.batches * self.batch
        )


class WallClock:
    def __init__(self, counters: CheckCounters | None = None):
        self._t0 = time.perf_counter()

    def elapsed(self) -> float:
        return time.perf_counter() - self._t0


class WorkClock:
    def __init__(self, counters: CheckCounters, model: WorkCostModel | None = None):
        self.counters = counters
        self.model = model if model is not None else WorkCostModel()

    def elapsed(self) -> float:
        return self.model.seconds(self.counters)


def make_clock(kind: str, counters: CheckCounters, model: WorkCostModel | None = None):
    if kind == "work":
        return WorkClock(counters, model)
    if kind == "wall":
        return WallClock(counters)
    raise ConfigError(f"unknown clock {kind!r}")


# -- configuration and results ----------------------------------------------------


@dataclass(frozen=True)
class PlannerConfig:
    """Planner settings. ``sparse`` and ``sampler`` default to values scaled to
    the problem bounds when left as ``None``."""

    batch_size: int = 100
    eta: float = 1.001
    rewire_factor: float = 1.2
    enable_eis: bool = True
    enable_adaptive_sampler: bool = True
    enable_adaptive_sparse: bool = True
    max_time: float = 1.0
    max_iterations: int | None = None
    rng_seed: int = 0
    full_resolution: float = DEFAULT_FULL_RESOLUTION
    sparse: SparseCheckConfig | None = None
    sampler: SamplerConfig | None = None
    sparse_fraction: float = 0.1
    clock: str = "work"
    cost_model: WorkCostModel = field(default_factory=WorkCostModel)
    stop_on_initial: bool = False

    def __post_init__(self):
        if not (self.max_time > 0 or self.max_iterations is not None):
            raise ConfigError("set a positive max_time or max_iterations")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ConfigError("max_iterations must be at least 1")
        if int(self.batch_size) < 1:
            raise ConfigError("batch_size must be at least 1")
        if not self.eta > 1:
            raise ConfigError("eta must exceed 1")
        if not self.full_resolution > 0:
            raise ConfigError("full_resolution must be positive")
        if not 0 < self.sparse_fraction <= 1:
            raise ConfigError("sparse_fraction must lie in (0, 1]")
        if self.clock not in ("work", "wall"):
            raise ConfigError(f"unknown clock {self.clock!r}")

    def sparse_for(self, problem: ProblemDef) -> SparseCheckConfig:
        if self.sparse is not None:
            cfg = self.sparse
        else:
            delta = max(self.sparse_fraction * problem.max_extent, self.full_resolution)
            cfg = SparseCheckConfig(delta_ini=delta, min_delta=self.full_resolution)
        if not self.enable_adaptive_sparse:
            cfg = SparseCheckConfig(delta_ini=cfg.delta_ini, omega=cfg.omega, mode="midpoint")
        return cfg

    def sampler_for(self, problem: ProblemDef) -> SamplerConfig:
        if self.sampler is not None:
            return self.sampler
        return SamplerConfig(
            batch_size=self.batch_size,
            gauss_sigma=0.1 * problem.max_extent,
            bridge_resolution=self.full_resolution,
            rng_seed=self.rng_seed,
        )


VARIANTS = {
    "mitstar": dict(enable_eis=True, enable_adaptive_sampler=True, enable_adaptive_sparse=True),
    "mitstar-eis": dict(enable_eis=True, enable_adaptive_sampler=False, enable_adaptive_sparse=False),
    "mitstar-as": dict(enable_eis=False, enable_adaptive_sampler=True, enable_adaptive_sparse=False),
    "mitstar-sc": dict(enable_eis=False, enable_adaptive_sampler=False, enable_adaptive_sparse=True),
    "baseline-off": dict(enable_eis=False, enable_adaptive_sampler=False, enable_adaptive_sparse=False),
}
PLANNER_IDS = tuple(VARIANTS) + ("rrt-connect",)


def variant_config(planner_id: str, **overrides) -> PlannerConfig:
    """Config for a named variant; ``rrt-connect`` keeps the defaults."""
    if planner_id not in PLANNER_IDS:
        raise ConfigError(f"unknown planner {planner_id!r}")
    return PlannerConfig(**{**VARIANTS.get(planner_id, {}), **overrides})


@dataclass(frozen=True)
class SolutionEvent:
    """``wall_time`` is the planner clock reading (modeled seconds by default)."""

    wall_time: float
    cost: float
    path: Path
    kind: str


@dataclass
class RunStats:
    n_samples: int = 0
    n_full_checks: int = 0
    n_sparse_checks: int = 0
    n_point_checks: int = 0
    iterations: int = 0
    elapsed: float = 0.0
    setup_time: float = 0.0


@dataclass
class PlanResult:
    path: Path | None
    events: list
    stats: RunStats

    @property
    def success(self) -> bool:
        return self.path is not None

    @property
    def cost(self) -> float:
        return self.path.cost if self.path is not None else math.inf


def _stats(counters: CheckCounters, iterations: int, elapsed: float, setup: float = 0.0) -> RunStats:
    return RunStats(
        n_samples=counters.samples,
        n_full_checks=counters.full_checks,
        n_sparse_checks=counters.sparse_checks,
        n_point_checks=counters.points,
        iterations=iterations,
        elapsed=elapsed,
        setup_time=setup,
    )


# -- MIT* ---------------------------------------------------------------------------


class MITStar:
    """Anytime batch planner guided by a lazy reverse search.

    After ``solve`` the instance exposes ``graph_``, ``eis_`` and ``result_``.
    """

    def __init__(self, problem: ProblemDef, config: PlannerConfig | None = None):
        self.problem = problem
        self.config = config if config is not None else PlannerConfig()

    def _measure(self, c_curr: float, eis: EisState) -> float:
        bounds = self.problem.measure
        s = c_curr if math.isfinite(c_curr) else eis.s_est
        if self.config.enable_eis or math.isfinite(c_curr):
            if math.isfinite(s) and s < self.problem.diagonal:
                try:
                    return min(union_measure(self.problem, s), bounds)
                except InfeasibleDiameterError:
                    return bounds
        return bounds

    def solve(self, on_solution: Callable[[SolutionEvent], None] | None = None) -> PlanResult:
        cfg = self.config
        problem = self.problem
        t_setup = time.perf_counter()
        counters = CheckCounters()
        clock = make_clock(cfg.clock, counters, cfg.cost_model)
        rng = np.random.default_rng(cfg.rng_seed)
        graph = SearchGraph(
            problem,
            sparse=cfg.sparse_for(problem),
            rgg=RggConfig(eta=cfg.eta, rewire_factor=cfg.rewire_factor),
            full_resolution=cfg.full_resolution,
            counters=counters,
        )
        scfg = cfg.sampler_for(problem)
        setup = time.perf_counter() - t_setup
        eis = EisState()
        ctx = SampleContext(problem)
        events: list[SolutionEvent] = []
        iterations = 0
        # No path beats the straight line to the nearest goal.
        floor = float(np.min(np.linalg.norm(problem.goals - problem.start, axis=1))) * (1 + 1e-12)

        def done() -> bool:
            if cfg.max_iterations is not None and iterations >= cfg.max_iterations:
                return True
            if events and (cfg.stop_on_initial or events[-1].cost <= floor):
                return True
            return cfg.max_time > 0 and clock.elapsed() >= cfg.max_time

        while not done():
            iterations += 1
            counters.batches += 1
            c_curr = graph.best_cost
            ctx.c_curr, ctx.eis = c_curr, eis
            batch = sample_adaptive_batch(
                ctx,
                scfg,
                graph.checker,
                rng,
                cascade=cfg.enable_adaptive_sampler,
                use_eis=cfg.enable_eis,
            )
            counters.samples += len(batch)
            graph.add_samples(batch.points)
            graph.rebuild(self._measure(c_curr, eis))
            eis_touched = False
            while graph.could_improve() and not done():
                res = graph.forward_step()
                if res.kind == COLLIDED:
                    if cfg.enable_eis and not math.isfinite(graph.best_cost) and not eis_touched:
                        new = graph.update_eis_from_edge(eis, res.source, res.target)
                        eis_touched = new is not eis
                        eis = new
                    graph.update_lazy_reverse_search(res.source, res.target)
                elif res.kind == FOUND and graph.best_cost < c_curr:
                    c_curr = graph.best_cost
                    path = Path.from_waypoints(graph.path_waypoints())
                    ev = SolutionEvent(clock.elapsed(), path.cost, path, IMPROVED if events else INITIAL)
                    events.append(ev)
                    if on_solution is not None:
                        on_solution(ev)
            if graph.refine_pending and cfg.enable_adaptive_sparse:
                graph.refine_sparse()
            graph.refine_pending = False
            s_est = eis.s_est if cfg.enable_eis else math.inf
            graph.prune(graph.best_cost, s_est)

        self.graph_ = graph
        self.eis_ = eis
        path = events[-1].path if events else None
        self.result_ = PlanResult(path, events, _stats(counters, iterations, clock.elapsed(), setup))
        return self.result_


def solve_mitstar(problem: ProblemDef, config: PlannerConfig | None = None, on_solution=None) -> PlanResult:
    return MITStar(problem, config).solve(on_solution)


def solve_ablation(problem: ProblemDef, config: PlannerConfig, on_solution=None) -> PlanResult:
    return MITStar(problem, config).solve(on_solution)


# -- RRT-Connect -------------------------------------------------------------------


def max_edge_length(n: int) -> float:
    if n in RRT_MAX_EDGE:
        return RRT_MAX_EDGE[n]
    nearest = min(RRT_MAX_EDGE, key=lambda d: (abs(d - n), d))
    return RRT_MAX_EDGE[nearest]


class _Tree:
    def __init__(self, roots: np.ndarray):
        self.X = np.array(roots, dtype=np.float64)
        self.parent = [-1] * len(self.X)
        self.n = self.n_roots = len(self.X)

    def add(self, x, parent: int) -> int:
        if self.n == self.X.shape[0]:
            self.X = np.vstack([self.X, np.empty_like(self.X)])
        self.X[self.n] = x
        self.parent.append(parent)
        self.n += 1
        return self.n - 1

    def nearest(self, x) -> int:
        return int(np.argmin(np.sum((self.X[: self.n] - x) ** 2, axis=1)))

    def branch(self, i: int) -> list:
        out = []
        while i >= 0:
            out.append(self.X[i].copy())
            i = self.parent[i]
        return out


TRAPPED, ADVANCED, REACHED = 0, 1, 2


class RRTConnect:
    """Two-tree RRT-Connect with goal bias; reports its first path only."""

    def __init__(self, problem: ProblemDef, config: PlannerConfig | None = None):
        self.problem = problem
        self.config = config if config is not None else PlannerConfig()

    def solve(self, on_solution: Callable[[SolutionEvent], None] | None = None) -> PlanResult:
        cfg = self.config
        problem = self.problem
        counters = CheckCounters()
        clock = make_clock(cfg.clock, counters, cfg.cost_model)
        checker = CollisionChecker(problem, counters)
        rng = np.random.default_rng(cfg.rng_seed)
        step = max_edge_length(problem.dim)
        start_tree = _Tree(problem.start[None, :])
        goal_tree = _Tree(problem.goals)
        ta, tb = start_tree, goal_tree
        iterations = 0

        def extend(tree: _Tree, target) -> tuple[int, int]:
            counters.nn_queries += 1
            near = tree.nearest(target)
            d = target - tree.X[near]
            dist = float(np.linalg.norm(d))
            if dist == 0.0:
                return TRAPPED, near
            reached = dist <= step
            new = target if reached else tree.X[near] + d * (step / dist)
            if not checker.check_motion_full(tree.X[near], new, cfg.full_resolution):
                return TRAPPED, -1
            idx = tree.add(new, near)
            return (REACHED if reached else ADVANCED), idx

        def connect(tree: _Tree, target) -> tuple[int, int]:
            while True:
                status, idx = extend(tree, target)
                if status != ADVANCED:
                    return status, idx
                if cfg.max_time > 0 and clock.elapsed() >= cfg.max_time:
                    return TRAPPED, -1

        events: list[SolutionEvent] = []
        path = None
        while True:
            if cfg.max_iterations is not None and iterations >= cfg.max_iterations:
                break
            if cfg.max_time > 0 and clock.elapsed() >= cfg.max_time:
                break
            iterations += 1
            counters.samples += 1
            if rng.random() < RRT_GOAL_BIAS:
                target = tb.X[int(rng.integers(tb.n_roots))].copy()
            else:
                target = sample_uniform(problem, rng)
            status, idx = extend(ta, target)
            if status != TRAPPED:
                status_b, idx_b = connect(tb, ta.X[idx])
                if status_b == REACHED:
                    a_half = ta.branch(idx)[::-1]
                    b_half = tb.branch(idx_b)[1:]
                    wps = a_half + b_half
                    if ta is goal_tree:
                        wps = wps[::-1]
                    path = Path.from_waypoints(np.array(wps))
                    ev = SolutionEvent(clock.elapsed(), path.cost, path, INITIAL)
                    events.append(ev)
                    if on_solution is not None:
                        on_solution(ev)
                    break
            ta, tb = tb, ta

        self.result_ = PlanResult(path, events, _stats(counters, iterations, clock.elapsed()))
        return self.result_


def solve_rrt_connect(problem: ProblemDef, config: PlannerConfig | None = None, on_solution=None) -> PlanResult:
    return RRTConnect(problem, config).solve(on_solution)


def make_planner(planner_id: str, problem: ProblemDef, config: PlannerConfig):
    if planner_id == "rrt-connect":
        return RRTConnect(problem, config)
    if planner_id in VARIANTS:
        return MITStar(problem, config)
    raise ConfigError(f"unknown planner {planner_id!r}")


def config_fields() -> list[str]:
    return [f.name for f in fields(PlannerConfig)]
