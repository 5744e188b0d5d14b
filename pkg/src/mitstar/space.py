"""Planning problems: bounds, box obstacles, start/goal states, paths and
the built-in benchmark scenario families."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path as FsPath

import numpy as np

from .validation import InvalidInputError, as_points, as_state, frozen

SUPPORTED_DIMS = (2, 4, 8, 16)
FAMILIES = ("FG", "RR", "DW", "GE")
DEFAULT_GOAL_TOLERANCE = 1e-4


@dataclass(frozen=True, eq=False)
class AabbObstacle:
    """Closed axis-aligned box; points on its faces are in collision."""

    min_corner: np.ndarray
    max_corner: np.ndarray

    def __post_init__(self):
        lo = as_state(self.min_corner, name="min_corner")
        hi = as_state(self.max_corner, dim=lo.shape[0], name="max_corner")
        if np.any(lo > hi):
            raise InvalidInputError(f"obstacle min {lo} exceeds max {hi}")
        object.__setattr__(self, "min_corner", frozen(lo))
        object.__setattr__(self, "max_corner", frozen(hi))

    @property
    def dim(self) -> int:
        return self.min_corner.shape[0]

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all(x >= self.min_corner) and np.all(x <= self.max_corner))

    def __eq__(self, other):
        if not isinstance(other, AabbObstacle):
            return NotImplemented
        return np.array_equal(self.min_corner, other.min_corner) and np.array_equal(
            self.max_corner, other.max_corner
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class ProblemDef:
    """A single-query planning problem inside an axis-aligned bounding box.

    ``goals`` holds one row per goal state; the goal region is the union of
    balls of radius ``goal_tolerance`` around them.
    """

    bounds: np.ndarray
    start: np.ndarray
    goals: np.ndarray
    obstacles: tuple = ()
    goal_tolerance: float = DEFAULT_GOAL_TOLERANCE
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        bounds = np.asarray(self.bounds, dtype=np.float64)
        if bounds.ndim != 2 or bounds.shape[1] != 2 or bounds.shape[0] < 2:
            raise InvalidInputError(f"bounds must have shape (n>=2, 2), got {bounds.shape}")
        if not np.all(np.isfinite(bounds)) or np.any(bounds[:, 1] <= bounds[:, 0]):
            raise InvalidInputError("bounds must be finite with hi > lo on every axis")
        n = bounds.shape[0]
        start = as_state(self.start, n, "start")
        goals = as_points(self.goals, n, "goals")
        if goals.shape[0] == 0:
            raise InvalidInputError("at least one goal is required")
        obstacles = tuple(self.obstacles)
        for ob in obstacles:
            if not isinstance(ob, AabbObstacle):
                raise InvalidInputError(f"unsupported obstacle {ob!r}")
            if ob.dim != n:
                raise InvalidInputError(f"obstacle dimension {ob.dim} != problem dimension {n}")
        tol = float(self.goal_tolerance)
        if not (tol >= 0 and math.isfinite(tol)):
            raise InvalidInputError("goal_tolerance must be a nonnegative real")

        object.__setattr__(self, "bounds", frozen(bounds))
        object.__setattr__(self, "start", frozen(start))
        object.__setattr__(self, "goals", frozen(goals))
        object.__setattr__(self, "obstacles", obstacles)
        object.__setattr__(self, "goal_tolerance", tol)
        lo = np.array([ob.min_corner for ob in obstacles]).reshape(-1, n)
        hi = np.array([ob.max_corner for ob in obstacles]).reshape(-1, n)
        object.__setattr__(self, "obstacle_lo", frozen(lo))
        object.__setattr__(self, "obstacle_hi", frozen(hi))

        for label, x in [("start", start)] + [(f"goal {i}", g) for i, g in enumerate(goals)]:
            if not self.point_is_valid(x):
                raise InvalidInputError(f"{label} {x.tolist()} is out of bounds or in collision")

    @property
    def dim(self) -> int:
        return self.bounds.shape[0]

    @property
    def extents(self) -> np.ndarray:
        return self.bounds[:, 1] - self.bounds[:, 0]

    @property
    def max_extent(self) -> float:
        return float(self.extents.max())

    @property
    def measure(self) -> float:
        """Lebesgue measure of the bounding box."""
        return float(np.prod(self.extents))

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.extents))

    def point_is_valid(self, x) -> bool:
        x = np.asarray(x, dtype=np.float64)
        if np.any(x < self.bounds[:, 0]) or np.any(x > self.bounds[:, 1]):
            return False
        if self.obstacle_lo.shape[0] == 0:
            return True
        inside = np.all((x >= self.obstacle_lo) & (x <= self.obstacle_hi), axis=1)
        return not bool(inside.any())

    def in_goal(self, x) -> bool:
        d = np.linalg.norm(self.goals - np.asarray(x, dtype=np.float64), axis=1)
        return bool(np.any(d <= self.goal_tolerance))

    def __eq__(self, other):
        if not isinstance(other, ProblemDef):
            return NotImplemented
        return (
            np.array_equal(self.bounds, other.bounds)
            and np.array_equal(self.start, other.start)
            and np.array_equal(self.goals, other.goals)
            and self.obstacles == other.obstacles
            and self.goal_tolerance == other.goal_tolerance
        )

    __hash__ = None

    # -- JSON -----------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "bounds": self.bounds.tolist(),
            "start": self.start.tolist(),
            "goals": self.goals.tolist(),
            "goal_tolerance": self.goal_tolerance,
            "obstacles": [
                {"min": ob.min_corner.tolist(), "max": ob.max_corner.tolist()}
                for ob in self.obstacles
            ],
        }

    @classmethod
    def from_dict(cls, data: dict, name: str = "custom") -> "ProblemDef":
        try:
            problem = cls(
                bounds=data["bounds"],
                start=data["start"],
                goals=data["goals"],
                obstacles=tuple(
                    AabbObstacle(ob["min"], ob["max"]) for ob in data.get("obstacles", [])
                ),
                goal_tolerance=data.get("goal_tolerance", DEFAULT_GOAL_TOLERANCE),
                name=name,
            )
        except KeyError as exc:
            raise InvalidInputError(f"scenario JSON is missing field {exc}") from exc
        if "dim" in data and int(data["dim"]) != problem.dim:
            raise InvalidInputError(f"dim field {data['dim']} disagrees with bounds ({problem.dim})")
        return problem

    def to_json(self) -> str:
        # json emits the shortest repr that round-trips each double exactly
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_json(cls, text: str, name: str = "custom") -> "ProblemDef":
        return cls.from_dict(json.loads(text), name=name)

    def save(self, path) -> None:
        FsPath(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "ProblemDef":
        path = FsPath(path)
        return cls.from_json(path.read_text(), name=path.stem)


@dataclass(frozen=True, eq=False)
class Path:
    """A piecewise-linear path and its Euclidean length."""

    waypoints: np.ndarray
    cost: float

    @classmethod
    def from_waypoints(cls, waypoints) -> "Path":
        wps = frozen(as_points(waypoints, name="waypoints"))
        return cls(wps, path_cost(wps))

    def __len__(self):
        return self.waypoints.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Path):
            return NotImplemented
        return np.array_equal(self.waypoints, other.waypoints) and self.cost == other.cost

    __hash__ = None


def path_cost(waypoints) -> float:
    """Sum of Euclidean segment lengths along ``waypoints``."""
    if isinstance(waypoints, np.ndarray):
        wps = waypoints
    else:
        rows = [np.asarray(w, dtype=np.float64) for w in waypoints]
        if len({r.shape for r in rows}) > 1:
            raise InvalidInputError("waypoints have mismatched dimensions")
        wps = np.array(rows)
    if wps.ndim != 2 or wps.shape[0] < 2:
        raise InvalidInputError("a path needs at least two waypoints of equal dimension")
    return float(np.linalg.norm(np.diff(wps, axis=0), axis=1).sum())


# -- benchmark scenario families ---------------------------------------------
#
# 2-D footprints as (xmin, xmax, ymin, ymax). Extruded to [0, 1] on every
# further axis, so each gap stays a slab-shaped opening in higher dimensions.

FG_START, FG_GOAL = (0.3, 0.5), (0.7, 0.5)
FG_WALLS = (
    (0.425, 0.575, 0.15, 0.65),
    (0.425, 0.575, 0.67, 0.85),
)
FG_GAP = (0.65, 0.67)

DW_START, DW_GOAL = (0.05, 0.5), (0.95, 0.5)
DW_WALLS = (
    (0.15, 0.20, 0.0, 0.705),
    (0.15, 0.20, 0.735, 0.88),
    (0.45, 0.55, 0.125, 0.635),
    (0.45, 0.55, 0.645, 1.0),
    (0.825, 0.875, 0.1, 0.835),
    (0.825, 0.875, 0.885, 1.0),
)
DW_GAPS = ((0.705, 0.735), (0.635, 0.645), (0.835, 0.885))

GE_START, GE_GOAL = (0.1, 0.5), (0.6, 0.5)
GE_SLABS = (
    (0.4, 0.5, 0.3, 0.7),
    (0.4, 0.8, 0.3, 0.4),
    (0.4, 0.8, 0.6, 0.7),
)

RR_START, RR_GOAL = (0.4, 0.4), (0.9, 0.9)
RR_COUNT_PER_DIM = 10
RR_WIDTH_RANGE = (0.02, 0.2)


def _lift(point2d, dim: int, fill: float = 0.5) -> np.ndarray:
    return np.array(list(point2d) + [fill] * (dim - 2), dtype=np.float64)


def _extrude(footprint, dim: int) -> AabbObstacle:
    x0, x1, y0, y1 = footprint
    lo = [x0, y0] + [0.0] * (dim - 2)
    hi = [x1, y1] + [1.0] * (dim - 2)
    return AabbObstacle(lo, hi)


def unit_bounds(dim: int) -> np.ndarray:
    return np.tile([0.0, 1.0], (dim, 1))


def make_scenario(family: str, dim: int, seed: int = 0) -> ProblemDef:
    """Build one of the FG / RR / DW / GE benchmark problems in ``[0, 1]^dim``.

    ``seed`` only matters for RR, where it selects the random instance.
    """
    family = str(family).upper()
    if family not in FAMILIES:
        raise InvalidInputError(f"unknown scenario family {family!r}; expected one of {FAMILIES}")
    if dim not in SUPPORTED_DIMS:
        raise InvalidInputError(f"unsupported dimension {dim}; expected one of {SUPPORTED_DIMS}")
    bounds = unit_bounds(dim)
    if family == "FG":
        obstacles = tuple(_extrude(w, dim) for w in FG_WALLS)
        start, goal = _lift(FG_START, dim), _lift(FG_GOAL, dim)
    elif family == "DW":
        obstacles = tuple(_extrude(w, dim) for w in DW_WALLS)
        start, goal = _lift(DW_START, dim), _lift(DW_GOAL, dim)
    elif family == "GE":
        obstacles = tuple(_extrude(w, dim) for w in GE_SLABS)
        start, goal = _lift(GE_START, dim), _lift(GE_GOAL, dim)
    else:
        start, goal = _lift(RR_START, dim), _lift(RR_GOAL, dim)
        obstacles = _random_rectangles(dim, seed, start, goal)
    return ProblemDef(
        bounds=bounds,
        start=start,
        goals=goal[None, :],
        obstacles=obstacles,
        name=f"{family}-R{dim}" + (f"-{seed}" if family == "RR" else ""),
    )


def _random_rectangles(dim: int, seed: int, start, goal) -> tuple:
    rng = np.random.default_rng(seed)
    lo_w, hi_w = RR_WIDTH_RANGE
    boxes = []
    while len(boxes) < RR_COUNT_PER_DIM * dim:
        center = rng.uniform(0.0, 1.0, dim)
        half = rng.uniform(lo_w, hi_w, dim) / 2
        lo = np.clip(center - half, 0.0, 1.0)
        hi = np.clip(center + half, 0.0, 1.0)
        box = AabbObstacle(lo, hi)
        if box.contains(start) or box.contains(goal):
            continue
        boxes.append(box)
    return tuple(boxes)


def make_empty(dim: int = 2, start=None, goal=None) -> ProblemDef:
    """Obstacle-free unit hypercube; defaults to the corner-to-corner query."""
    start = np.zeros(dim) if start is None else start
    goal = np.ones(dim) if goal is None else goal
    return ProblemDef(
        bounds=unit_bounds(dim),
        start=start,
        goals=np.asarray(goal, dtype=np.float64)[None, :],
        name=f"EMPTY-R{dim}",
    )


def reference_waypoints(family: str, dim: int) -> np.ndarray:
    """A hand-built collision-free path through the documented gaps."""
    family = family.upper()
    mid = lambda x, y: _lift((x, y), dim)  # noqa: E731
    if family == "FG":
        y = sum(FG_GAP) / 2
        pts = [FG_START, (0.4, y), (0.6, y), FG_GOAL]
    elif family == "DW":
        g1, g2, g3 = (sum(g) / 2 for g in DW_GAPS)
        pts = [DW_START, (0.12, g1), (0.23, g1), (0.42, g2), (0.58, g2),
               (0.80, g3), (0.90, g3), DW_GOAL]
    elif family == "GE":
        pts = [GE_START, (0.35, 0.75), (0.85, 0.75), (0.85, 0.5), GE_GOAL]
    else:
        raise InvalidInputError(f"no reference path for {family}")
    return np.array([mid(*p) for p in pts])
