"""Point validity, discretized motion validation and length-adaptive sparse
edge checks against axis-aligned box obstacles.

A motion check of segment ``a -> b`` with ``N`` intervals evaluates the points
``a + (i / N) * (b - a)`` for ``i = 0..N``: the endpoints against bounds and
obstacles, interior points against obstacles only (the box is convex). The
full check visits them outside-in (both endpoints, then recursive midpoints,
breadth first) and stops at the first invalid point.

The visiting order only matters for how many points a check costs. Whether a
segment passes is decided exactly, without enumerating points, from the
contiguous index range each closed box covers; boundary indices are confirmed
with the same floating-point arithmetic a literal scan would use.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .space import ProblemDef
from .validation import ConfigError, InvalidInputError, as_state

DEFAULT_FULL_RESOLUTION = 5e-6


@dataclass
class CheckCounters:
    """Running totals; the work clock converts these into modeled seconds."""

    points: int = 0
    full_checks: int = 0
    sparse_checks: int = 0
    samples: int = 0
    graph_edges: int = 0
    queue_ops: int = 0
    reverse_edges: int = 0
    nn_queries: int = 0
    batches: int = 0


@dataclass(frozen=True)
class SparseCheckConfig:
    """Sparse edge-check resolution.

    ``mode="length"`` places ``floor(len / delta_k + 1)`` points on an edge;
    ``mode="midpoint"`` tests the single midpoint regardless of length.
    ``literal=True`` makes every refinement reset to ``omega * delta_ini``
    instead of compounding.
    """

    delta_ini: float = 0.05
    omega: float = 0.5
    delta_k: float | None = None
    mode: str = "length"
    literal: bool = False
    min_delta: float = 0.0

    def __post_init__(self):
        if not (self.delta_ini > 0 and math.isfinite(self.delta_ini)):
            raise ConfigError("delta_ini must be positive")
        if not 0.0 < self.omega < 1.0:
            raise ConfigError("omega must lie in (0, 1)")
        if self.mode not in ("length", "midpoint"):
            raise ConfigError(f"unknown sparse mode {self.mode!r}")
        if self.delta_k is None:
            object.__setattr__(self, "delta_k", float(self.delta_ini))
        if not 0.0 < self.delta_k <= self.delta_ini:
            raise ConfigError("delta_k must lie in (0, delta_ini]")


def refine_sparse(cfg: SparseCheckConfig) -> SparseCheckConfig:
    base = cfg.delta_ini if cfg.literal else cfg.delta_k
    return replace(cfg, delta_k=min(max(cfg.omega * base, cfg.min_delta), cfg.delta_ini))


def sparse_check_count(a, b, delta_k: float) -> int:
    """Number of points a length-adaptive sparse check places on ``a -> b``."""
    if not delta_k > 0:
        raise InvalidInputError("delta_k must be positive")
    length = float(np.linalg.norm(np.asarray(b, dtype=np.float64) - np.asarray(a, dtype=np.float64)))
    return max(1, math.floor(length / delta_k + 1))


def full_interval_count(length: float, resolution: float) -> int:
    return max(1, math.ceil(length / resolution))


# -- index-range machinery ------------------------------------------------------


def _box_t_intervals(a, d, lo, hi):
    """Parameter interval [t0, t1] (clipped to [0, 1]) of the segment inside each box."""
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d
        ta = (lo - a) * inv
        tb = (hi - a) * inv
    tmin = np.minimum(ta, tb)
    tmax = np.maximum(ta, tb)
    zero = d == 0
    inside_axis = (a >= lo) & (a <= hi)
    tmin = np.where(zero, np.where(inside_axis, -np.inf, np.inf), tmin)
    tmax = np.where(zero, np.where(inside_axis, np.inf, -np.inf), tmax)
    t0 = np.maximum(tmin.max(axis=-1), 0.0)
    t1 = np.minimum(tmax.min(axis=-1), 1.0)
    return t0, t1


def _index_ranges(a, b, n_intervals, lo, hi):
    """Inclusive index ranges of interior points ``1..N-1`` inside each box."""
    if lo.shape[0] == 0 or n_intervals < 2:
        return []
    d = b - a
    t0, t1 = _box_t_intervals(a, d, lo, hi)
    ranges = []
    for j in np.nonzero(t0 <= t1 + 1e-9)[0]:
        box_lo, box_hi = lo[j], hi[j]

        def inside(i, box_lo=box_lo, box_hi=box_hi):
            p = a + (i / n_intervals) * d
            return bool(np.all(p >= box_lo) and np.all(p <= box_hi))

        i_lo = max(1, math.ceil(t0[j] * n_intervals) - 2)
        i_hi = min(n_intervals - 1, math.floor(t1[j] * n_intervals) + 2)
        while i_lo <= i_hi and not inside(i_lo):
            i_lo += 1
        while i_hi >= i_lo and not inside(i_hi):
            i_hi -= 1
        if i_lo <= i_hi:
            ranges.append((i_lo, i_hi))
    return ranges


def outside_in_first_hit(n_intervals: int, ranges) -> int | None:
    """Points an outside-in scan of ``0..N`` evaluates up to the first index in
    ``ranges`` (inclusive); ``None`` when no index is hit."""
    if not ranges:
        return None
    lo = np.array([r[0] for r in ranges])
    hi = np.array([r[1] for r in ranges])

    def hits(idx):
        return np.any((idx[:, None] >= lo) & (idx[:, None] <= hi), axis=1)

    ends = np.array([0] if n_intervals == 0 else [0, n_intervals])
    h = hits(ends)
    if h.any():
        return int(np.argmax(h)) + 1
    count = ends.size
    los, his = np.array([0]), np.array([n_intervals])
    while True:
        keep = his - los >= 2
        los, his = los[keep], his[keep]
        if los.size == 0:
            return None
        mids = (los + his) // 2
        h = hits(mids)
        if h.any():
            return count + int(np.argmax(h)) + 1
        count += mids.size
        new_los = np.empty(2 * los.size, dtype=np.int64)
        new_his = np.empty_like(new_los)
        new_los[0::2], new_los[1::2] = los, mids
        new_his[0::2], new_his[1::2] = mids, his
        los, his = new_los, new_his


class CollisionChecker:
    """Validity queries for one problem, with point/check accounting."""

    def __init__(self, problem: ProblemDef, counters: CheckCounters | None = None):
        self.problem = problem
        self.counters = counters if counters is not None else CheckCounters()
        self._lo = problem.obstacle_lo
        self._hi = problem.obstacle_hi
        self._blo = problem.bounds[:, 0]
        self._bhi = problem.bounds[:, 1]

    # -- points -------------------------------------------------------------

    def _valid_nocount(self, X: np.ndarray) -> np.ndarray:
        ok = np.all((X >= self._blo) & (X <= self._bhi), axis=1)
        for lo, hi in zip(self._lo, self._hi):
            ok &= ~np.all((X >= lo) & (X <= hi), axis=1)
        return ok

    def valid_points(self, X) -> np.ndarray:
        """Vectorized validity of the rows of ``X``."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.problem.dim:
            raise InvalidInputError(f"points have dimension {X.shape[1]}, expected {self.problem.dim}")
        self.counters.points += X.shape[0]
        return self._valid_nocount(X)

    __call__ = valid_points

    def is_valid(self, x) -> bool:
        x = as_state(x, self.problem.dim)
        return bool(self.valid_points(x[None, :])[0])

    # -- motions ------------------------------------------------------------

    def _scan(self, a, b, n_intervals) -> tuple[bool, int]:
        """(passes, points evaluated) for an outside-in scan with ``N`` intervals."""
        ends = np.vstack([a, b]) if n_intervals > 0 else a[None, :]
        ok_ends = self._valid_nocount(ends)
        if not ok_ends[0]:
            return False, 1
        if n_intervals > 0 and not ok_ends[1]:
            return False, 2
        ranges = _index_ranges(a, b, n_intervals, self._lo, self._hi)
        if not ranges:
            return True, n_intervals + 1
        return False, outside_in_first_hit(n_intervals, ranges)

    def check_motion_full(self, a, b, resolution: float = DEFAULT_FULL_RESOLUTION) -> bool:
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        length = float(np.linalg.norm(b - a))
        n = 0 if length == 0.0 else full_interval_count(length, resolution)
        ok, used = self._scan(a, b, n)
        self.counters.points += used
        self.counters.full_checks += 1
        return ok

    def check_motion_sparse(self, a, b, cfg: SparseCheckConfig) -> bool:
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        self.counters.sparse_checks += 1
        if cfg.mode == "midpoint":
            self.counters.points += 1
            return bool(self._valid_nocount(((a + b) / 2)[None, :])[0])
        theta = sparse_check_count(a, b, cfg.delta_k)
        self.counters.points += theta
        return self._scan(a, b, theta - 1)[0]

    def first_valid_bisection(self, a, b, resolution: float) -> tuple[np.ndarray | None, int]:
        """First valid point of a breadth-first bisection of segment ``(a, b)``.

        Level ``d`` tests ``t = (2j + 1) / 2**d`` left to right; levels stop once
        the pieces being split are shorter than ``resolution``. Both ends must
        lie inside the bounds. Returns the point (or ``None``) and the number of
        points a literal scan tests, which is what gets charged.
        """
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        d = b - a
        length = float(np.linalg.norm(d))
        t0, t1 = _box_t_intervals(a, d, self._lo, self._hi)
        spans = sorted((float(x), float(y)) for x, y in zip(t0, t1) if x <= y)
        merged: list[list[float]] = []
        for x, y in spans:
            if merged and x <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], y)
            else:
                merged.append([x, y])
        gaps, prev = [], -math.inf
        for x, y in merged:
            gaps.append((prev, x))
            prev = y
        gaps.append((prev, math.inf))
        tested = 0
        level = 1
        while length / 2 ** (level - 1) >= resolution:
            scale = 2.0**level
            for u, v in gaps:
                m = math.floor(u * scale) + 1 if u > -math.inf else 1
                m = max(m, 1)
                if m % 2 == 0:
                    m += 1
                if m < scale and m / scale < v:
                    used = tested + (m - 1) // 2 + 1
                    p = a + (m / scale) * d
                    if self._valid_nocount(p[None, :])[0]:
                        self.counters.points += used
                        return p, used
                    return self._first_valid_literal(a, b, resolution)
            tested += 2 ** (level - 1)
            level += 1
        self.counters.points += tested
        return None, tested

    def _first_valid_literal(self, a, b, resolution):
        length = float(np.linalg.norm(b - a))
        tested = 0
        level = 1
        while length / 2 ** (level - 1) >= resolution:
            t = (2 * np.arange(2 ** (level - 1)) + 1) / 2**level
            P = a + t[:, None] * (b - a)
            ok = self._valid_nocount(P)
            if ok.any():
                first = int(np.argmax(ok))
                self.counters.points += tested + first + 1
                return P[first], tested + first + 1
            tested += t.size
            level += 1
        self.counters.points += tested
        return None, tested

    def check_motion_sparse_many(self, A, B, cfg: SparseCheckConfig) -> np.ndarray:
        """Vectorized sparse checks of edges ``A[e] -> B[e]`` (endpoints assumed valid).

        Every edge is charged its full point count.
        """
        A = np.asarray(A, dtype=np.float64)
        B = np.asarray(B, dtype=np.float64)
        E = A.shape[0]
        self.counters.sparse_checks += E
        if E == 0:
            return np.ones(0, dtype=bool)
        D = B - A
        if cfg.mode == "midpoint":
            self.counters.points += E
            return self._valid_nocount(A + 0.5 * D)
        lengths = np.linalg.norm(D, axis=1)
        n_int = np.maximum(np.floor(lengths / cfg.delta_k + 1), 1) - 1
        self.counters.points += int(n_int.sum() + E)
        ok = np.ones(E, dtype=bool)
        for lo, hi in zip(self._lo, self._hi):
            t0, t1 = _box_t_intervals(A[:, None, :], D[:, None, :], lo, hi)
            t0, t1 = t0[:, 0], t1[:, 0]
            meets = t0 <= t1
            with np.errstate(invalid="ignore"):
                i_lo = np.ceil(np.where(meets, t0, 0.0) * n_int)
                i_hi = np.floor(np.where(meets, t1, 0.0) * n_int)
            ok &= ~(meets & (i_lo <= i_hi) & (n_int > 0))
        return ok


# -- functional surface ---------------------------------------------------------


def is_valid(problem: ProblemDef, x) -> bool:
    x = as_state(x, problem.dim)
    return problem.point_is_valid(x)


def check_motion_full(problem: ProblemDef, a, b, resolution: float = DEFAULT_FULL_RESOLUTION) -> bool:
    return CollisionChecker(problem).check_motion_full(
        as_state(a, problem.dim, "a"), as_state(b, problem.dim, "b"), resolution
    )


def check_motion_sparse(problem: ProblemDef, a, b, cfg: SparseCheckConfig) -> bool:
    return CollisionChecker(problem).check_motion_sparse(
        as_state(a, problem.dim, "a"), as_state(b, problem.dim, "b"), cfg
    )
