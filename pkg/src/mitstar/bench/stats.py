"""Run statistics: medians with failures as infinite cost, order-statistic
confidence intervals and relative improvements."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from scipy.stats import binom

from .campaign import RunRecord


def median(values) -> float:
    """Median where ``inf`` takes part in the ordering. Even counts average the
    two middle values, or take the upper one when it is infinite."""
    v = sorted(float(x) for x in values)
    if not v:
        raise ValueError("median of an empty sample")
    n = len(v)
    mid = n // 2
    if n % 2:
        return v[mid]
    lo, hi = v[mid - 1], v[mid]
    return hi if math.isinf(hi) else (lo + hi) / 2


def median_ci_ranks(n: int, confidence: float = 0.99) -> tuple[int, int] | None:
    """1-based order-statistic ranks ``(l, u)`` with ``P(x_(l) <= m <= x_(u)) >= confidence``.

    ``l`` is the largest rank whose lower-tail binomial(n, 1/2) mass stays within
    half the allowed error; ``u = n + 1 - l``. ``None`` when ``n`` is too small.
    """
    alpha = 1.0 - confidence
    l = 0
    while l + 1 <= n and binom.cdf(l, n, 0.5) <= alpha / 2:
        l += 1
    if l < 1:
        return None
    return l, n + 1 - l


def median_ci(values, confidence: float = 0.99) -> tuple[float, float] | None:
    v = sorted(float(x) for x in values)
    ranks = median_ci_ranks(len(v), confidence)
    if ranks is None:
        return None
    l, u = ranks
    return v[l - 1], v[u - 1]


def improvement(baseline: float, candidate: float) -> float:
    """Relative reduction of ``candidate`` against ``baseline``, in percent."""
    if baseline == 0 or math.isinf(baseline):
        return math.nan
    return (baseline - candidate) / baseline * 100.0


@dataclass
class GroupStats:
    scenario: str
    dim: int
    instance_seed: int
    planner: str
    n_runs: int
    success_rate: float
    median_t_init: float
    ci_t_init: tuple | None
    median_c_init: float
    ci_c_init: tuple | None
    median_c_final: float
    ci_c_final: tuple | None


def group_key(r: RunRecord) -> tuple:
    return (r.scenario, r.dim, r.instance_seed, r.planner)


def compute_stats(records, confidence: float = 0.99) -> dict[tuple, GroupStats]:
    """Per (scenario, dim, instance, planner) medians, intervals and success rate.
    Groups without records are simply absent."""
    groups: dict[tuple, list] = {}
    for r in records:
        groups.setdefault(group_key(r), []).append(r)
    out = {}
    for key in sorted(groups):
        rs = groups[key]
        t_init = [r.t_init for r in rs]
        c_init = [r.c_init for r in rs]
        c_final = [r.c_final for r in rs]
        out[key] = GroupStats(
            *key,
            n_runs=len(rs),
            success_rate=sum(r.success for r in rs) / len(rs),
            median_t_init=median(t_init),
            ci_t_init=median_ci(t_init, confidence),
            median_c_init=median(c_init),
            ci_c_init=median_ci(c_init, confidence),
            median_c_final=median(c_final),
            ci_c_final=median_ci(c_final, confidence),
        )
    return out


def improvements(stats: dict[tuple, GroupStats], baseline: str = "baseline-off") -> list[dict]:
    """Median initial-time improvement of every planner over ``baseline``."""
    rows = []
    for (scenario, dim, inst, planner), s in stats.items():
        base = stats.get((scenario, dim, inst, baseline))
        if base is None or planner == baseline:
            continue
        rows.append(
            {
                "scenario": scenario,
                "dim": dim,
                "instance_seed": inst,
                "planner": planner,
                "baseline": baseline,
                "t_init_improvement_pct": improvement(base.median_t_init, s.median_t_init),
            }
        )
    return rows


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    if isinstance(v, (tuple, list)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def stats_document(stats: dict[tuple, GroupStats], baseline: str = "baseline-off") -> dict:
    return {
        "groups": [_jsonable(asdict(s)) for s in stats.values()],
        "improvements": [_jsonable(r) for r in improvements(stats, baseline)],
    }
