"""State generation: uniform, informed and estimated-informed draws, and the
obstacle-based adaptive sampler cascade.

Each draw of the adaptive sampler picks a preliminary state ``x_pre`` by phase
(uniform before any lazy solution, the estimated informed set while only lazy
solutions exist, the informed set once a solution exists). An invalid
``x_pre`` is perturbed by an isotropic Gaussian into ``x_temp``; if that is
invalid too, the segment between them is bisected breadth first and the first
valid point is kept. The result concentrates samples near obstacle surfaces.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .collision import CollisionChecker
from .phs import InfeasibleDiameterError, ProlateHyperspheroid
from .space import ProblemDef
from .validation import ConfigError, InvalidInputError

# Provenance codes of emitted samples.
FROM_PRE, FROM_GAUSS, FROM_BRIDGE = 0, 1, 2

# Phase of the preliminary draw.
CASE_UNIFORM, CASE_EIS, CASE_INFORMED = 1, 2, 4

_MAX_REJECTION_ROUNDS = 1000


@dataclass(frozen=True)
class SamplerConfig:
    """``gauss_sigma=None`` resolves to a tenth of the largest bounds extent."""

    batch_size: int = 100
    gauss_sigma: float | None = None
    bridge_resolution: float = 5e-6
    rng_seed: int = 0

    def __post_init__(self):
        if int(self.batch_size) < 1:
            raise ConfigError("batch_size must be at least 1")
        if self.gauss_sigma is not None and not self.gauss_sigma > 0:
            raise ConfigError("gauss_sigma must be positive")
        if not self.bridge_resolution > 0:
            raise ConfigError("bridge_resolution must be positive")

    def sigma_for(self, problem: ProblemDef) -> float:
        return self.gauss_sigma if self.gauss_sigma is not None else 0.1 * problem.max_extent


@dataclass
class SampleContext:
    problem: ProblemDef
    c_curr: float = math.inf
    eis: object | None = None  # anything with ``s_adms`` and ``s_est`` attributes


@dataclass
class SampleBatch:
    points: np.ndarray
    source: np.ndarray
    x_pre: np.ndarray
    case: int
    attempts: int = 0
    point_checks: int = 0
    extras: dict = field(default_factory=dict)

    def __len__(self):
        return self.points.shape[0]


def _size(size):
    return 1 if size is None else int(size)


def _squeeze(X, size):
    return X[0] if size is None else X


def sample_uniform(problem: ProblemDef, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    lo, hi = problem.bounds[:, 0], problem.bounds[:, 1]
    X = lo + (hi - lo) * rng.random((_size(size), problem.dim))
    return _squeeze(X, size)


def sample_unit_ball(n: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    if n < 1:
        raise InvalidInputError("ball dimension must be at least 1")
    k = _size(size)
    g = rng.standard_normal((k, n))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    r = rng.random((k, 1)) ** (1.0 / n)
    return _squeeze(g / norms * r, size)


def goal_ellipsoids(problem: ProblemDef, s_diam: float) -> list[ProlateHyperspheroid]:
    """One hyperspheroid per goal that ``s_diam`` can reach; raises if none can."""
    out = []
    for goal in problem.goals:
        s_min = float(np.linalg.norm(goal - problem.start))
        if s_min > 0 and s_diam > s_min and math.isfinite(s_diam):
            out.append(ProlateHyperspheroid.build(problem.start, goal, s_diam))
    if not out:
        raise InfeasibleDiameterError(f"diameter {s_diam!r} is infeasible for every goal")
    return out


def union_measure(problem: ProblemDef, s_diam: float) -> float:
    """Sum of per-goal ellipsoid measures (an upper bound on the union)."""
    return sum(e.measure() for e in goal_ellipsoids(problem, s_diam))


def _in_union(ells, X):
    inside = np.zeros(X.shape[0], dtype=bool)
    for e in ells:
        inside |= e.focal_sum(X) < e.s_diam
    return inside


def _draw_from_ellipsoids(ells, rng, k):
    weights = np.array([e.measure() for e in ells])
    choice = rng.choice(len(ells), size=k, p=weights / weights.sum()) if len(ells) > 1 else np.zeros(k, int)
    X = np.empty((k, ells[0].dim))
    ok = np.empty(k, dtype=bool)
    for j, e in enumerate(ells):
        idx = np.nonzero(choice == j)[0]
        if idx.size:
            X[idx] = e.transform(sample_unit_ball(e.dim, rng, idx.size))
            ok[idx] = e.focal_sum(X[idx]) < e.s_diam
    if len(ells) > 1:
        # Overlaps are reachable from several ellipsoids; thin them back to uniform.
        cover = sum((e.focal_sum(X) < e.s_diam).astype(int) for e in ells)
        ok &= rng.random(k) * np.maximum(cover, 1) < 1.0
    return X, ok


def sample_phs_union(problem: ProblemDef, s_diam: float, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draws from the union of per-goal ellipsoids intersected with the bounds.

    Goals are picked in proportion to their ellipsoid measure. When the union
    is larger than the bounds, bounds-uniform draws are filtered by membership
    instead, which is cheaper and samples the same set.
    """
    ells = goal_ellipsoids(problem, s_diam)
    k = _size(size)
    lo, hi = problem.bounds[:, 0], problem.bounds[:, 1]
    from_bounds = sum(e.measure() for e in ells) > problem.measure
    out = np.empty((k, problem.dim))
    filled = 0
    for _ in range(_MAX_REJECTION_ROUNDS):
        need = k - filled
        if need == 0:
            break
        if from_bounds:
            X = sample_uniform(problem, rng, need)
            ok = _in_union(ells, X)
        else:
            X, ok = _draw_from_ellipsoids(ells, rng, need)
            ok &= np.all((X >= lo) & (X <= hi), axis=1)
        X = X[ok]
        out[filled:filled + X.shape[0]] = X
        filled += X.shape[0]
    if filled < k:
        raise InfeasibleDiameterError("ellipsoid union barely intersects the bounds")
    return _squeeze(out, size)


def sample_eis(problem: ProblemDef, s_est: float, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    return sample_phs_union(problem, s_est, rng, size)


def sample_informed(problem: ProblemDef, c_curr: float, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    if not math.isfinite(c_curr):
        raise InvalidInputError("informed sampling needs a finite solution cost")
    return sample_phs_union(problem, c_curr, rng, size)


def select_case(ctx: SampleContext, use_eis: bool = True) -> tuple[int, float]:
    """Phase of the preliminary draw and the diameter it uses."""
    if math.isfinite(ctx.c_curr):
        return CASE_INFORMED, ctx.c_curr
    eis = ctx.eis
    if use_eis and eis is not None and math.isfinite(eis.s_adms) and math.isfinite(eis.s_est):
        # Past the bounds diagonal the estimated set covers every state.
        if eis.s_est < ctx.problem.diagonal:
            return CASE_EIS, eis.s_est
    return CASE_UNIFORM, math.inf


def draw_preliminary(ctx: SampleContext, k: int, rng: np.random.Generator, use_eis: bool = True) -> tuple[int, np.ndarray]:
    case, s = select_case(ctx, use_eis)
    if case == CASE_UNIFORM:
        return case, sample_uniform(ctx.problem, rng, k)
    try:
        return case, sample_phs_union(ctx.problem, s, rng, k)
    except InfeasibleDiameterError:
        return CASE_UNIFORM, sample_uniform(ctx.problem, rng, k)


def bridge_search(x_pre, x_temp, validity: Callable, resolution: float) -> tuple[np.ndarray | None, int]:
    """First valid point of a breadth-first bisection of ``(x_pre, x_temp)``.

    Level ``d`` tests ``t = (2j + 1) / 2**d`` left to right; levels stop once the
    pieces being split are shorter than ``resolution``. Returns the point (or
    ``None``) and the number of points tested. A ``CollisionChecker`` passed as
    ``validity`` answers the same query without enumerating points.
    """
    if isinstance(validity, CollisionChecker):
        return validity.first_valid_bisection(x_pre, x_temp, resolution)
    length = float(np.linalg.norm(x_temp - x_pre))
    tested = 0
    d = 1
    while length / 2 ** (d - 1) >= resolution:
        t = (2 * np.arange(2 ** (d - 1)) + 1) / 2**d
        P = x_pre + t[:, None] * (x_temp - x_pre)
        ok = validity(P)
        if ok.any():
            first = int(np.argmax(ok))
            return P[first], tested + first + 1
        tested += t.size
        d += 1
    return None, tested


def sample_adaptive_batch(
    ctx: SampleContext,
    cfg: SamplerConfig,
    validity: Callable[[np.ndarray], np.ndarray],
    rng: np.random.Generator,
    cascade: bool = True,
    use_eis: bool = True,
) -> SampleBatch:
    """Runs ``cfg.batch_size`` draw attempts; returns the valid states they yield.

    ``validity`` maps a (k, n) array to a boolean mask (a ``CollisionChecker``
    qualifies). With ``cascade=False``
    invalid preliminary draws are simply discarded (rejection sampling).
    """
    problem = ctx.problem
    k = int(cfg.batch_size)
    case, pre = draw_preliminary(ctx, k, rng, use_eis)
    valid = validity(pre)
    checks = k
    sigma = cfg.sigma_for(problem)
    lo, hi = problem.bounds[:, 0], problem.bounds[:, 1]
    points, source, origin = [], [], []
    for i in range(k):
        if valid[i]:
            points.append(pre[i])
            source.append(FROM_PRE)
            origin.append(pre[i])
            continue
        if not cascade:
            continue
        temp = np.clip(pre[i] + sigma * rng.standard_normal(problem.dim), lo, hi)
        checks += 1
        if validity(temp[None, :])[0]:
            points.append(temp)
            source.append(FROM_GAUSS)
            origin.append(pre[i])
            continue
        crit, used = bridge_search(pre[i], temp, validity, cfg.bridge_resolution)
        checks += used
        if crit is not None:
            points.append(crit)
            source.append(FROM_BRIDGE)
            origin.append(pre[i])
    n = problem.dim
    return SampleBatch(
        points=np.array(points).reshape(-1, n),
        source=np.array(source, dtype=np.int8),
        x_pre=np.array(origin).reshape(-1, n),
        case=case,
        attempts=k,
        point_checks=checks,
    )
