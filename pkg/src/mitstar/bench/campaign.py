"""Seeded multi-run benchmark campaigns."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..planner import PLANNER_IDS, VARIANTS, PlannerConfig, make_planner
from ..space import FAMILIES, SUPPORTED_DIMS, ProblemDef, make_scenario
from ..validation import ConfigError

TAG_INSTANCE = 1
TAG_RUN = 2
_SEED_MASK = (1 << 63) - 1

# Default per-scenario budgets in seconds; other settings fall back to DEFAULT_MAX_TIME.
SCENARIO_MAX_TIME = {
    ("fg", 4): 0.08, ("fg", 8): 0.12, ("fg", 16): 0.20,
    ("rr", 4): 0.80, ("rr", 8): 2.00, ("rr", 16): 4.00,
    ("dw", 4): 0.30, ("dw", 8): 0.60, ("dw", 16): 1.50,
    ("ge", 2): 0.05, ("ge", 4): 0.10, ("ge", 8): 2.00,
}
DEFAULT_MAX_TIME = 1.0


def derive_seed(base: int, tag: int, counter: int) -> int:
    """63-bit seed hashed from ``(base, tag, counter)``; distinct bases give
    unrelated seed sets rather than shifted copies of one another."""
    state = np.random.SeedSequence([int(base), int(tag), int(counter)]).generate_state(1, dtype=np.uint64)
    return int(state[0]) & _SEED_MASK


def default_max_time(family: str, dim: int) -> float:
    return SCENARIO_MAX_TIME.get((family.lower(), dim), DEFAULT_MAX_TIME)


def resolve_workers(requested: int | None) -> int:
    env = os.environ.get("BENCH_WORKERS")
    if env:
        try:
            requested = int(env)
        except ValueError as exc:
            raise ConfigError(f"BENCH_WORKERS must be an integer, got {env!r}") from exc
    if requested is None:
        requested = os.cpu_count() or 1
    if requested < 1:
        raise ConfigError("worker count must be at least 1")
    return requested


@dataclass(frozen=True)
class CampaignSpec:
    """One family, one or more dimensions and planners, ``runs`` seeds each.

    ``scenario_file`` replaces the generated scenario with a problem loaded
    from JSON (``family``/``dims`` are then ignored).
    """

    family: str = "fg"
    dims: tuple = (2,)
    planners: tuple = ("mitstar",)
    runs: int = 10
    max_time: float | None = None
    base_seed: int = 0
    instances: int = 1
    workers: int | None = 1
    scenario_file: str | None = None
    clock: str = "work"
    stop_on_initial: bool = False

    def validate(self) -> "CampaignSpec":
        if self.scenario_file is None:
            if self.family.upper() not in FAMILIES:
                raise ConfigError(f"unknown scenario family {self.family!r}")
            for d in self.dims:
                if d not in SUPPORTED_DIMS:
                    raise ConfigError(f"unsupported dimension {d}; choose from {SUPPORTED_DIMS}")
            if not self.dims:
                raise ConfigError("at least one dimension is required")
        elif not os.path.isfile(self.scenario_file):
            raise ConfigError(f"scenario file not found: {self.scenario_file}")
        if not self.planners:
            raise ConfigError("at least one planner is required")
        for p in self.planners:
            if p not in PLANNER_IDS:
                raise ConfigError(f"unknown planner {p!r}; choose from {PLANNER_IDS}")
        if self.runs < 1:
            raise ConfigError("runs must be at least 1")
        if self.instances < 1:
            raise ConfigError("instances must be at least 1")
        if self.max_time is not None and not (self.max_time > 0 and math.isfinite(self.max_time)):
            raise ConfigError("max_time must be positive")
        if self.clock not in ("work", "wall"):
            raise ConfigError(f"unknown clock {self.clock!r}")
        return self


@dataclass
class RunRecord:
    scenario: str
    dim: int
    instance_seed: int
    planner: str
    run_seed: int
    success: bool
    t_init: float
    c_init: float
    t_final: float
    c_final: float
    n_samples: int
    n_full_checks: int
    n_sparse_checks: int
    events: list = field(default_factory=list, compare=False, repr=False)


CSV_COLUMNS = (
    "scenario", "dim", "instance_seed", "planner", "run_seed", "success",
    "t_init", "c_init", "t_final", "c_final",
    "n_samples", "n_full_checks", "n_sparse_checks",
)


@dataclass(frozen=True)
class RunTask:
    scenario: str
    dim: int
    instance_seed: int
    planner: str
    run_seed: int
    max_time: float
    clock: str
    stop_on_initial: bool
    problem_json: str | None = None


def _problem_for(task: RunTask) -> ProblemDef:
    if task.problem_json is not None:
        return ProblemDef.from_json(task.problem_json, name=task.scenario)
    return make_scenario(task.scenario.upper(), task.dim, task.instance_seed)


def execute(task: RunTask) -> RunRecord:
    problem = _problem_for(task)
    cfg = PlannerConfig(
        **VARIANTS.get(task.planner, {}),
        max_time=task.max_time,
        rng_seed=task.run_seed,
        clock=task.clock,
        stop_on_initial=task.stop_on_initial,
    )
    result = make_planner(task.planner, problem, cfg).solve()
    events = [
        {"time": e.wall_time, "cost": e.cost, "kind": e.kind, "waypoints": e.path.waypoints.tolist()}
        for e in result.events
    ]
    first = result.events[0] if result.events else None
    return RunRecord(
        scenario=task.scenario,
        dim=task.dim,
        instance_seed=task.instance_seed,
        planner=task.planner,
        run_seed=task.run_seed,
        success=result.success,
        t_init=first.wall_time if first else math.inf,
        c_init=first.cost if first else math.inf,
        t_final=result.stats.elapsed,
        c_final=result.cost,
        n_samples=result.stats.n_samples,
        n_full_checks=result.stats.n_full_checks,
        n_sparse_checks=result.stats.n_sparse_checks,
        events=events,
    )


def plan_tasks(spec: CampaignSpec) -> list[RunTask]:
    spec.validate()
    tasks = []
    if spec.scenario_file is not None:
        problem = ProblemDef.load(spec.scenario_file)
        name = os.path.splitext(os.path.basename(spec.scenario_file))[0]
        text = problem.to_json()
        settings = [(name, problem.dim, 0, text)]
    else:
        fam = spec.family.lower()
        settings = []
        for d in spec.dims:
            n_inst = spec.instances if fam == "rr" else 1
            for k in range(n_inst):
                inst = derive_seed(spec.base_seed, TAG_INSTANCE, k) if fam == "rr" else 0
                settings.append((fam, d, inst, None))
    for scenario, dim, inst, text in settings:
        budget = spec.max_time if spec.max_time is not None else default_max_time(scenario, dim)
        for planner in spec.planners:
            for r in range(spec.runs):
                tasks.append(
                    RunTask(
                        scenario=scenario,
                        dim=dim,
                        instance_seed=inst,
                        planner=planner,
                        run_seed=derive_seed(spec.base_seed, TAG_RUN, r),
                        max_time=budget,
                        clock=spec.clock,
                        stop_on_initial=spec.stop_on_initial,
                        problem_json=text,
                    )
                )
    return tasks


def run_campaign(spec: CampaignSpec, progress=None) -> list[RunRecord]:
    """Runs every task; records come back in task order whatever the worker count."""
    tasks = plan_tasks(spec)
    workers = resolve_workers(spec.workers)
    if workers == 1 or len(tasks) == 1:
        out = []
        for t in tasks:
            out.append(execute(t))
            if progress is not None:
                progress(len(out), len(tasks))
        return out
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(execute, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
