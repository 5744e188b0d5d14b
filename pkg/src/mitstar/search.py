"""Search core: implicit random geometric graph, lazy reverse search over
sparsely checked edges, forward edge-queue search with full edge checks,
estimated-informed-set bookkeeping and pruning.

States carry stable integer ids: 0 is the start, ``1..m`` are the goals, new
samples are appended. Pruned states keep their id but are marked dead.
"""
from __future__ import annotations

import heapq
import json
import math
from dataclasses import asdict, dataclass, replace
from typing import Callable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from .collision import DEFAULT_FULL_RESOLUTION, CheckCounters, CollisionChecker, SparseCheckConfig, refine_sparse
from .phs import unit_ball_volume
from .space import ProblemDef
from .validation import InvalidInputError

INF = math.inf
_KEY_SHIFT = 2**31

FOUND, COLLIDED, EXHAUSTED = "found", "collided", "exhausted"


# -- estimated informed set --------------------------------------------------


@dataclass(frozen=True)
class EisState:
    """``gamma``/``e_gamma`` are ``None`` until the first admissible estimate."""

    s_adms: float = INF
    gamma: float | None = None
    e_gamma: float | None = None
    s_est: float = INF
    expansions: int = 0

    @property
    def active(self) -> bool:
        return math.isfinite(self.s_est)


def reliability(g_s: float, s_adms: float) -> float:
    return g_s / s_adms


def expansion_factor(gamma: float) -> float:
    return math.hypot(1.0, 1.0 - gamma)


def update_eis(eis: EisState, g_s: float, c_hat: float, h_t: float) -> EisState:
    """Estimate (first call) or expand (later calls) the estimated informed set
    from a forward edge that failed its full check."""
    if not (math.isfinite(g_s) and math.isfinite(h_t) and math.isfinite(c_hat)):
        return eis
    if math.isfinite(eis.s_est):
        return replace(eis, s_est=eis.s_est * eis.e_gamma, expansions=eis.expansions + 1)
    s_adms = g_s + c_hat + h_t
    if not s_adms > 0:
        return eis
    gamma = reliability(g_s, s_adms)
    e_gamma = expansion_factor(gamma)
    return EisState(s_adms=s_adms, gamma=gamma, e_gamma=e_gamma, s_est=s_adms * e_gamma)


# -- rewiring radius -----------------------------------------------------------


@dataclass(frozen=True)
class RggConfig:
    """``measure_fn`` returns the measure of the active sampling set; without it
    ``measure`` is used."""

    eta: float = 1.001
    rewire_factor: float = 1.2
    measure: float = 1.0
    measure_fn: Callable[[], float] | None = None

    def __post_init__(self):
        if not self.eta > 1:
            raise InvalidInputError("eta must exceed 1")
        if not self.rewire_factor > 0:
            raise InvalidInputError("rewire_factor must be positive")

    def current_measure(self) -> float:
        return float(self.measure_fn()) if self.measure_fn is not None else float(self.measure)


def rewire_radius(cfg: RggConfig, q: int, n: int, measure: float | None = None) -> float:
    if q < 2:
        raise InvalidInputError("rewire radius needs q >= 2")
    lam = cfg.current_measure() if measure is None else float(measure)
    zeta = unit_ball_volume(n)
    return cfg.eta * (2.0 * (1.0 + 1.0 / n) * (lam / zeta) * (math.log(q) / q)) ** (1.0 / n)


# -- graph -----------------------------------------------------------------------


@dataclass(frozen=True)
class StepResult:
    kind: str
    source: int = -1
    target: int = -1
    cost: float = INF


def _pair_key(i, j):
    lo, hi = (i, j) if i < j else (j, i)
    return lo * _KEY_SHIFT + hi


class SearchGraph:
    """Samples, forward tree, reverse tree and the forward edge queue."""

    def __init__(
        self,
        problem: ProblemDef,
        sparse: SparseCheckConfig | None = None,
        rgg: RggConfig | None = None,
        full_resolution: float = DEFAULT_FULL_RESOLUTION,
        counters: CheckCounters | None = None,
    ):
        self.problem = problem
        self.checker = CollisionChecker(problem, counters)
        self.counters = self.checker.counters
        self.sparse = sparse if sparse is not None else SparseCheckConfig()
        self.rgg = rgg if rgg is not None else RggConfig()
        self.full_resolution = full_resolution
        self.n_goals = problem.goals.shape[0]
        self.goal_ids = np.arange(1, self.n_goals + 1)

        n = problem.dim
        self._X = np.empty((64, n))
        self._alive = np.zeros(64, dtype=bool)
        self.size = 0
        self._seen: set[bytes] = set()
        self.g = np.full(64, INF)
        self.h = np.full(64, INF)
        self.parent = np.full(64, -1, dtype=np.int64)
        self.edge_cost = np.full(64, INF)
        self.children: dict[int, set] = {}
        self.rparent = np.full(64, -1, dtype=np.int64)

        self._sparse_keys = np.zeros(0, dtype=np.int64)
        self._sparse_vals = np.zeros(0, dtype=bool)
        self._full_cache: dict[int, bool] = {}
        self.blacklist: set[int] = set()
        self._e_i = self._e_j = np.zeros(0, dtype=np.int64)
        self._e_w = np.zeros(0)
        self._e_keys = np.zeros(0, dtype=np.int64)
        self._e_active = np.zeros(0, dtype=bool)
        self._adj_ptr = np.zeros(1, dtype=np.int64)
        self._adj_dst = np.zeros(0, dtype=np.int64)
        self._adj_w = np.zeros(0)
        self.queue: list = []
        self.radius = INF
        self.reverse_searches = 0
        self.refine_pending = False

        self.add_samples(np.vstack([problem.start[None, :], problem.goals]), force=True)
        self.g[0] = 0.0
        self.children[0] = set()

    # -- storage -------------------------------------------------------------

    def _grow(self, need: int):
        cap = self._X.shape[0]
        if need <= cap:
            return
        new = max(need, 2 * cap)

        def ext(a, fill):
            b = np.full((new,) + a.shape[1:], fill, dtype=a.dtype)
            b[:cap] = a
            return b

        self._X = ext(self._X, 0.0)
        self._alive = ext(self._alive, False)
        self.g = ext(self.g, INF)
        self.h = ext(self.h, INF)
        self.parent = ext(self.parent, -1)
        self.edge_cost = ext(self.edge_cost, INF)
        self.rparent = ext(self.rparent, -1)

    def add_samples(self, P, force: bool = False) -> np.ndarray:
        """Appends states, dropping exact duplicates; returns the new ids."""
        P = np.asarray(P, dtype=np.float64).reshape(-1, self.problem.dim)
        keep = []
        for row in P:
            b = row.tobytes()
            if force or b not in self._seen:
                self._seen.add(b)
                keep.append(row)
        if not keep:
            return np.zeros(0, dtype=np.int64)
        start = self.size
        self._grow(start + len(keep))
        self._X[start:start + len(keep)] = keep
        self._alive[start:start + len(keep)] = True
        self.size = start + len(keep)
        return np.arange(start, self.size)

    @property
    def X(self) -> np.ndarray:
        return self._X[: self.size]

    @property
    def alive(self) -> np.ndarray:
        return self._alive[: self.size]

    def alive_ids(self) -> np.ndarray:
        return np.nonzero(self.alive)[0]

    @property
    def n_alive(self) -> int:
        return int(self.alive.sum())

    def state(self, i: int) -> np.ndarray:
        return self._X[i]

    # -- graph construction --------------------------------------------------------

    def rebuild(self, measure: float | None = None):
        """Recomputes neighbourhoods, sparse checks, the reverse search and the
        forward queue for the current sample set."""
        ids = self.alive_ids()
        q = ids.size
        lam = self.rgg.current_measure() if measure is None else measure
        self.radius = self.rgg.rewire_factor * rewire_radius(self.rgg, max(q, 2), self.problem.dim, lam)
        P = self._X[ids]
        pairs = cKDTree(P).query_pairs(self.radius, output_type="ndarray")
        i = ids[pairs[:, 0]] if pairs.size else np.zeros(0, dtype=np.int64)
        j = ids[pairs[:, 1]] if pairs.size else np.zeros(0, dtype=np.int64)
        lo, hi = np.minimum(i, j), np.maximum(i, j)
        w = np.linalg.norm(self._X[lo] - self._X[hi], axis=1)
        nz = w > 0
        lo, hi, w = lo[nz], hi[nz], w[nz]
        keys = lo * _KEY_SHIFT + hi
        order = np.argsort(keys)
        lo, hi, w, keys = lo[order], hi[order], w[order], keys[order]
        self.counters.graph_edges += int(keys.size)

        vals = np.empty(keys.size, dtype=bool)
        pos = np.searchsorted(self._sparse_keys, keys)
        pos_c = np.minimum(pos, max(self._sparse_keys.size - 1, 0))
        hit = (pos < self._sparse_keys.size) & (self._sparse_keys[pos_c] == keys) if self._sparse_keys.size else np.zeros(keys.size, bool)
        vals[hit] = self._sparse_vals[pos_c[hit]]
        miss = ~hit
        vals[miss] = self.checker.check_motion_sparse_many(self._X[lo[miss]], self._X[hi[miss]], self.sparse)
        self._sparse_keys, self._sparse_vals = keys, vals

        admitted = vals.copy()
        if self.blacklist:
            admitted &= ~np.isin(keys, np.fromiter(self.blacklist, dtype=np.int64))
        self._e_i, self._e_j, self._e_w, self._e_keys = lo[admitted], hi[admitted], w[admitted], keys[admitted]
        self._e_active = np.ones(self._e_keys.size, dtype=bool)

        src = np.concatenate([self._e_i, self._e_j])
        dst = np.concatenate([self._e_j, self._e_i])
        ww = np.concatenate([self._e_w, self._e_w])
        o = np.lexsort((dst, src))
        self._adj_dst, self._adj_w = dst[o], ww[o]
        self._adj_ptr = np.concatenate([[0], np.cumsum(np.bincount(src, minlength=self.size))])

        self.reverse_search()
        self.rebuild_queue()

    def neighbours(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        """Admitted neighbours of ``v`` and the edge lengths."""
        if v + 1 >= self._adj_ptr.size:
            return np.zeros(0, dtype=np.int64), np.zeros(0)
        a, b = self._adj_ptr[v], self._adj_ptr[v + 1]
        return self._adj_dst[a:b], self._adj_w[a:b]

    def sparse_admitted(self, i: int, j: int) -> bool:
        k = _pair_key(i, j)
        p = np.searchsorted(self._e_keys, k)
        return bool(p < self._e_keys.size and self._e_keys[p] == k and self._e_active[p])

    # -- reverse search ------------------------------------------------------------

    def reverse_search(self):
        """Goal-rooted shortest paths over admitted edges; sets ``h`` and ``rparent``."""
        N = self.size
        m = self._e_active
        A = csr_matrix((self._e_w[m], (self._e_i[m], self._e_j[m])), shape=(N, N))
        dist, pred, _ = dijkstra(A, directed=False, indices=self.goal_ids, min_only=True, return_predecessors=True)
        self.h[:N] = dist
        self.rparent[:N] = np.where(pred < 0, -1, pred)
        self.reverse_searches += 1
        self.counters.reverse_edges += int(m.sum())

    def update_lazy_reverse_search(self, s: int, t: int) -> bool:
        """Blacklists ``s -- t``; recomputes the reverse search if the edge was in
        the reverse tree. Returns whether a recompute happened."""
        k = _pair_key(s, t)
        self.blacklist.add(k)
        p = np.searchsorted(self._e_keys, k)
        if p < self._e_keys.size and self._e_keys[p] == k and self._e_active[p]:
            self._e_active[p] = False
            self.refine_pending = True
            if self.rparent[s] == t or self.rparent[t] == s:
                self.reverse_search()
                return True
        return False

    def refine_sparse(self):
        """Applies one sparse refinement and drops cached sparse results."""
        cfg = refine_sparse(self.sparse)
        if cfg.delta_k != self.sparse.delta_k:
            self._sparse_keys = np.zeros(0, dtype=np.int64)
            self._sparse_vals = np.zeros(0, dtype=bool)
        self.sparse = cfg
        self.refine_pending = False

    # -- forward search ------------------------------------------------------------

    @property
    def best_cost(self) -> float:
        return float(self.g[self.goal_ids].min())

    @property
    def best_goal(self) -> int:
        return int(self.goal_ids[np.argmin(self.g[self.goal_ids])])

    def rebuild_queue(self):
        c_curr = self.best_cost
        tv = np.nonzero(self.alive & np.isfinite(self.g[: self.size]))[0]
        counts = self._adj_ptr[tv + 1] - self._adj_ptr[tv]
        total = int(counts.sum())
        if total == 0:
            self.queue = []
            return
        s = np.repeat(tv, counts)
        offs = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        pos = np.repeat(self._adj_ptr[tv], counts) + offs
        t = self._adj_dst[pos]
        c = self._adj_w[pos]
        gs = self.g[s]
        key = gs + c + self.h[t]
        keep = np.isfinite(key) & (gs + c < self.g[t]) & (t != 0) & (key < c_curr)
        s, t, c, key = s[keep], t[keep], c[keep], key[keep]
        o = np.lexsort((t, s, c, key))
        self.queue = list(zip(key[o].tolist(), c[o].tolist(), s[o].tolist(), t[o].tolist()))
        self.counters.queue_ops += len(self.queue)

    def _push_out_edges(self, v: int):
        t, c = self.neighbours(v)
        if t.size == 0:
            return
        gv = self.g[v]
        key = gv + c + self.h[t]
        keep = np.isfinite(key) & (gv + c < self.g[t]) & (t != 0) & (key < self.best_cost)
        for kk, cc, tt in zip(key[keep].tolist(), c[keep].tolist(), t[keep].tolist()):
            if _pair_key(v, tt) not in self.blacklist:
                heapq.heappush(self.queue, (kk, cc, v, tt))
                self.counters.queue_ops += 1

    def _clean_top(self) -> bool:
        q = self.queue
        g, h = self.g, self.h
        while q:
            key, c, s, t = q[0]
            gs = g[s]
            if gs + c >= g[t] or not math.isfinite(gs) or _pair_key(s, t) in self.blacklist:
                heapq.heappop(q)
                self.counters.queue_ops += 1
                continue
            cur = gs + c + h[t]
            if cur != key:
                heapq.heappop(q)
                self.counters.queue_ops += 1
                if cur > key and math.isfinite(cur):
                    heapq.heappush(q, (cur, c, s, t))
                    self.counters.queue_ops += 1
                continue
            return True
        return False

    def best_key(self) -> float:
        return self.queue[0][0] if self._clean_top() else INF

    def could_improve(self, c_curr: float | None = None) -> bool:
        c = self.best_cost if c_curr is None else c_curr
        return self.best_key() < c

    def full_valid(self, s: int, t: int) -> bool:
        k = _pair_key(s, t)
        v = self._full_cache.get(k)
        if v is None:
            v = self.checker.check_motion_full(self._X[s], self._X[t], self.full_resolution)
            self._full_cache[k] = v
        return v

    def forward_step(self) -> StepResult:
        if not self._clean_top():
            return StepResult(EXHAUSTED)
        key, c, s, t = heapq.heappop(self.queue)
        self.counters.queue_ops += 1
        if not self.full_valid(s, t):
            return StepResult(COLLIDED, s, t, c)
        self._connect(s, t, c)
        return StepResult(FOUND, s, t, c)

    def _connect(self, s: int, t: int, c: float):
        old = int(self.parent[t])
        if old >= 0:
            self.children[old].discard(t)
        self.parent[t] = s
        self.edge_cost[t] = c
        self.children.setdefault(s, set()).add(t)
        self.children.setdefault(t, set())
        self.g[t] = self.g[s] + c
        stack = [t]
        while stack:
            v = stack.pop()
            for ch in self.children.get(v, ()):
                self.g[ch] = self.g[v] + self.edge_cost[ch]
                stack.append(ch)
            self._push_out_edges(v)

    def path_ids(self, goal: int | None = None) -> list[int]:
        v = self.best_goal if goal is None else goal
        if not math.isfinite(self.g[v]):
            return []
        out = [v]
        while v != 0:
            v = int(self.parent[v])
            out.append(v)
        return out[::-1]

    def path_waypoints(self, goal: int | None = None) -> np.ndarray:
        return self._X[self.path_ids(goal)].copy()

    def update_eis_from_edge(self, eis: EisState, s: int, t: int) -> EisState:
        c = float(np.linalg.norm(self._X[s] - self._X[t]))
        return update_eis(eis, float(self.g[s]), c, float(self.h[t]))

    # -- pruning -------------------------------------------------------------------

    def heuristic_f(self, ids: np.ndarray) -> np.ndarray:
        P = self._X[ids]
        to_start = np.linalg.norm(P - self.problem.start, axis=1)
        to_goal = np.min(np.linalg.norm(P[:, None, :] - self.problem.goals[None, :, :], axis=2), axis=1)
        return to_start + to_goal

    def _detach_subtree(self, v: int):
        p = int(self.parent[v])
        if p >= 0:
            self.children[p].discard(v)
        stack = [v]
        while stack:
            u = stack.pop()
            stack.extend(self.children.pop(u, ()))
            self.g[u] = INF
            self.parent[u] = -1
            self.edge_cost[u] = INF

    def prune(self, c_curr: float, s_est: float = INF) -> int:
        """Removes states that cannot lie on a path cheaper than the bound;
        returns how many were removed."""
        if math.isfinite(c_curr):
            bound = c_curr
        elif math.isfinite(s_est):
            bound = s_est
        else:
            return 0
        ids = self.alive_ids()
        ids = ids[ids > self.n_goals]
        if ids.size == 0:
            return 0
        drop = ids[self.heuristic_f(ids) >= bound]
        if drop.size == 0:
            return 0
        protected = set(self.path_ids()) if math.isfinite(self.best_cost) else set()
        removed = 0
        for v in drop.tolist():
            if v in protected:
                continue
            if math.isfinite(self.g[v]):
                self._detach_subtree(v)
            self._alive[v] = False
            self.h[v] = INF
            removed += 1
        return removed

    # -- inspection ----------------------------------------------------------------

    def forward_edges(self) -> list[tuple[int, int]]:
        return [(int(self.parent[v]), v) for v in range(self.size) if self.parent[v] >= 0]

    def reverse_edges(self) -> list[tuple[int, int]]:
        return [(v, int(self.rparent[v])) for v in range(self.size) if self.rparent[v] >= 0]

    def admitted_edges(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        m = self._e_active
        return self._e_i[m].copy(), self._e_j[m].copy(), self._e_w[m].copy()

    def snapshot(self, eis: EisState | None = None) -> dict:
        """JSON-ready dump of samples, both trees, labels and EIS state.

        Schema: ``{"dim", "radius", "delta_k", "states": [{"id", "x", "g", "h",
        "parent", "rparent"}], "blacklist": [[i, j]], "eis": {...} | null}``;
        non-finite numbers are written as the string ``"inf"``.
        """

        def num(v):
            return float(v) if math.isfinite(v) else "inf"

        states = [
            {
                "id": int(i),
                "x": self._X[i].tolist(),
                "g": num(self.g[i]),
                "h": num(self.h[i]),
                "parent": int(self.parent[i]),
                "rparent": int(self.rparent[i]),
            }
            for i in self.alive_ids()
        ]
        eis_d = None
        if eis is not None:
            eis_d = {k: (num(v) if isinstance(v, float) else v) for k, v in asdict(eis).items()}
        return {
            "dim": self.problem.dim,
            "radius": num(self.radius),
            "delta_k": self.sparse.delta_k,
            "states": states,
            "blacklist": sorted([[k // _KEY_SHIFT, k % _KEY_SHIFT] for k in self.blacklist]),
            "eis": eis_d,
        }

    def snapshot_json(self, eis: EisState | None = None) -> str:
        return json.dumps(self.snapshot(eis), sort_keys=True)
