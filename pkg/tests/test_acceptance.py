"""Acceptance criteria 1-11, one test each.

Each test records a one-line PASS/FAIL verdict that the terminal summary
prints, whatever the outcome of the others.
"""
import io
import math
import time

import mpmath
import numpy as np
import pytest
from scipy.stats import chi2_contingency

import oracles
from mitstar.bench.campaign import CampaignSpec, run_campaign
from mitstar.bench.outputs import write_runs_csv
from mitstar.bench.stats import compute_stats, improvement, median
from mitstar.collision import CollisionChecker, sparse_check_count
from mitstar.phs import build_phs
from mitstar.sampling import SampleContext, SamplerConfig, sample_adaptive_batch, sample_uniform, sample_unit_ball
from mitstar.search import EisState, RggConfig, expansion_factor, rewire_radius, update_eis
from mitstar.space import make_empty, make_scenario

pytestmark = pytest.mark.acceptance

VERDICTS: dict[int, str] = {}
SEEDS = 100
RESOLUTION = 5e-6


def verdict(k: int, ok: bool, detail: str):
    VERDICTS[k] = f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    assert ok, VERDICTS[k]


# -- shared campaigns (criteria 6-10) --------------------------------------------------

CAMPAIGNS = {
    "fg2": CampaignSpec(family="fg", dims=(2,), planners=("mitstar",), runs=SEEDS, max_time=1.0),
    "dw2": CampaignSpec(family="dw", dims=(2,), planners=("mitstar",), runs=SEEDS, max_time=1.0),
    "dw4": CampaignSpec(
        family="dw", dims=(4,), planners=("mitstar", "baseline-off", "mitstar-as", "mitstar-eis"),
        runs=SEEDS, max_time=2.0, stop_on_initial=True,
    ),
    "ge4": CampaignSpec(
        family="ge", dims=(4,), planners=("mitstar", "baseline-off"), runs=SEEDS, max_time=2.0, stop_on_initial=True
    ),
    "ge2": CampaignSpec(
        family="ge", dims=(2,), planners=("mitstar-as", "mitstar-eis"), runs=SEEDS, max_time=2.0, stop_on_initial=True
    ),
}
_cache: dict[str, tuple[list, float]] = {}


def campaign(name):
    if name not in _cache:
        t0 = time.perf_counter()
        recs = run_campaign(CAMPAIGNS[name])
        _cache[name] = (recs, time.perf_counter() - t0)
    return _cache[name]


def empty_campaign():
    if "empty" not in _cache:
        recs = []
        p = make_empty(2)
        from mitstar.planner import PlannerConfig, solve_mitstar
        from mitstar.bench.campaign import TAG_RUN, derive_seed

        for r in range(SEEDS):
            res = solve_mitstar(p, PlannerConfig(max_time=1.0, rng_seed=derive_seed(0, TAG_RUN, r)))
            recs.append(res)
        _cache["empty"] = (recs, 0.0)
    return _cache["empty"][0]


def csv_bytes(records) -> bytes:
    import os
    import tempfile

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "runs.csv")
        write_runs_csv(records, path)
        with open(path, "rb") as fh:
            return fh.read()


# -- 1-5: closed forms and geometry ----------------------------------------------------------


def test_criterion_01_ellipsoid_correctness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst_slack, worst_orth, worst_det = -math.inf, 0.0, 0.0
    for n in (2, 4, 8, 16):
        a, b = rng.uniform(size=n), rng.uniform(size=n)
        s = float(np.linalg.norm(b - a)) * rng.uniform(1.01, 2.0)
        e = build_phs(a, b, s)
        X = e.transform(sample_unit_ball(n, rng, 100_000))
        fs = np.linalg.norm(X - a, axis=1) + np.linalg.norm(b - X, axis=1)
        worst_slack = max(worst_slack, float(np.max(fs - s)))
        R = e.rotation
        worst_orth = max(worst_orth, float(np.abs(R.T @ R - np.eye(n)).max()))
        worst_det = max(worst_det, abs(np.linalg.det(R) - 1.0))
    dt = time.perf_counter() - t0
    ok = worst_slack < 1e-9 and worst_orth <= 1e-9 and worst_det <= 1e-9 and dt < 10
    verdict(1, ok, f"max(focal sum - s)={worst_slack:.2e}, orth err={worst_orth:.1e}, det err={worst_det:.1e}, {dt:.2f}s")


def _cells(X, e):
    """8 equal-area cells: 4 quadrants of the principal frame x 2 radial shells."""
    U = ((X - e.center) @ e.rotation) / e.axis_lengths
    quad = (U[:, 0] >= 0).astype(int) * 2 + (U[:, 1] >= 0).astype(int)
    shell = (np.sum(U**2, axis=1) >= 0.5).astype(int)
    return np.bincount(quad * 2 + shell, minlength=8)


def test_criterion_02_uniformity_against_rejection_oracle():
    rng = np.random.default_rng(202)
    e = build_phs([0.3, 0.5], [0.7, 0.5], 0.5)
    n = 100_000
    direct = e.transform(sample_unit_ball(2, rng, n))
    reference = oracles.rejection_ellipse_samples([0.3, 0.5], [0.7, 0.5], 0.5, rng, n)
    table = np.vstack([_cells(direct, e), _cells(reference, e)])
    p = chi2_contingency(table)[1]
    verdict(2, p > 0.001, f"chi-square p={p:.3f} over 8 cells, counts {table[0].tolist()}")


def test_criterion_03_eis_formulas():
    rng = np.random.default_rng(303)
    worst = 0.0
    for g, c, h in rng.uniform(1e-3, 10, size=(1000, 3)):
        e = update_eis(EisState(), g, c, h)
        ref = oracles.mp_eis(g, c, h)
        for got, want in zip((e.s_adms, e.gamma, e.e_gamma, e.s_est), ref):
            worst = max(worst, float(abs((mpmath.mpf(got) - want) / want)))
    e0 = update_eis(EisState(), 0.0, 0.4, 0.6)
    e1 = update_eis(EisState(), 1.0, 0.0, 0.0)
    near = [expansion_factor(1 - 10.0**-k) for k in range(1, 16)]
    limits = e0.e_gamma == math.sqrt(2) and e1.e_gamma == 1.0 and all(a >= b for a, b in zip(near, near[1:]))
    limits = limits and abs(near[-1] - 1.0) < 1e-15
    verdict(3, worst <= 1e-12 and limits, f"max rel err={worst:.1e} over 1000 triples, boundary cases exact={limits}")


def test_criterion_04_sparse_count_exact():
    rng = np.random.default_rng(404)
    L = rng.uniform(0, 5, 10_000)
    D = rng.uniform(1e-4, 2, 10_000)
    bad = sum(sparse_check_count([0.0], [l], d) != oracles.exact_sparse_count(l, d) for l, d in zip(L, D))
    verdict(4, bad == 0, f"{bad} mismatches against exact rationals over 10^4 pairs")


def test_criterion_05_rewire_radius():
    rng = np.random.default_rng(505)
    worst = 0.0
    for _ in range(1000):
        eta = rng.uniform(1.0001, 3)
        lam = 10 ** rng.uniform(-3, 3)
        q = int(rng.integers(2, 10**6))
        n = int(rng.choice([2, 3, 4, 8, 16]))
        got = rewire_radius(RggConfig(eta=eta), q, n, lam)
        want = oracles.mp_rewire_radius(eta, lam, q, n)
        worst = max(worst, float(abs((mpmath.mpf(got) - want) / want)))
    worked = rewire_radius(RggConfig(eta=1.001), 100, 2, 1.0)
    ok = worst <= 1e-12 and abs(worked - 0.20991) < 5e-6
    verdict(5, ok, f"max rel err={worst:.1e} over 1000 sets, worked value={worked:.6f}")


# -- 6-9: planning campaigns -------------------------------------------------------------


@pytest.mark.slow
def test_criterion_06_completeness():
    fg, t_fg = campaign("fg2")
    dw, t_dw = campaign("dw2")
    s_fg = sum(r.success for r in fg)
    s_dw = sum(r.success for r in dw)
    runtime = t_fg + t_dw
    ok = s_fg == SEEDS and s_dw == SEEDS and runtime < 240
    verdict(6, ok, f"FG-R2 {s_fg}/{SEEDS}, DW-R2 {s_dw}/{SEEDS} solved within 1 s; campaign time {runtime:.0f}s")


@pytest.mark.slow
def test_criterion_07_optimality_proxy():
    results = empty_campaign()
    med = median([r.cost for r in results])
    rel = (med - math.sqrt(2)) / math.sqrt(2)
    verdict(7, 0 <= rel <= 0.01, f"median final cost {med:.9f}, {100 * rel:.2e}% above sqrt(2)")


@pytest.mark.slow
def test_criterion_08_initial_time_improvement():
    parts, ok = [], True
    for name in ("dw4", "ge4"):
        stats = compute_stats(campaign(name)[0])
        scen, dim = name[:2], int(name[2:])
        full = stats[(scen, dim, 0, "mitstar")].median_t_init
        off = stats[(scen, dim, 0, "baseline-off")].median_t_init
        imp = improvement(off, full)
        ok &= full < off and imp >= 10.0
        parts.append(f"{scen.upper()}-R{dim} t_init {full:.4f} vs {off:.4f} ({imp:.1f}%)")
    verdict(8, ok, "; ".join(parts))


@pytest.mark.slow
def test_criterion_09_ablation_ordering():
    dw = compute_stats(campaign("dw4")[0])
    ge = compute_stats(campaign("ge2")[0])
    dw_as, dw_eis = dw[("dw", 4, 0, "mitstar-as")].median_c_init, dw[("dw", 4, 0, "mitstar-eis")].median_c_init
    ge_as, ge_eis = ge[("ge", 2, 0, "mitstar-as")].median_c_init, ge[("ge", 2, 0, "mitstar-eis")].median_c_init
    ok = dw_as < dw_eis and ge_eis < ge_as
    verdict(
        9, ok, f"DW-R4 c_init AS {dw_as:.4f} < EIS {dw_eis:.4f}: {dw_as < dw_eis}; "
        f"GE-R2 c_init EIS {ge_eis:.4f} < AS {ge_as:.4f}: {ge_eis < ge_as}",
    )


# -- 10: soundness across every benchmark run ------------------------------------------------


def _segment_valid(problem, a, b):
    L = float(np.linalg.norm(b - a))
    return oracles.dense_scan(problem, a, b, 0 if L == 0 else math.ceil(L / RESOLUTION))


@pytest.mark.slow
def test_criterion_10_soundness_and_reproducibility():
    invalid = nonmonotone = paths = 0
    checked: set[bytes] = set()
    problems = {}
    for name in CAMPAIGNS:
        for r in campaign(name)[0]:
            key = (r.scenario, r.dim)
            if key not in problems:
                problems[key] = make_scenario(r.scenario.upper(), r.dim, r.instance_seed)
            p = problems[key]
            costs = [e["cost"] for e in r.events]
            nonmonotone += any(b >= a for a, b in zip(costs, costs[1:]))
            for e in r.events:
                paths += 1
                W = np.array(e["waypoints"])
                ok = np.allclose(W[0], p.start) and p.in_goal(W[-1])
                for a, b in zip(W, W[1:]):
                    k = key[0].encode() + a.tobytes() + b.tobytes()
                    if k in checked:
                        continue
                    checked.add(k)
                    ok &= _segment_valid(p, a, b)
                invalid += not ok
    for res in empty_campaign():
        costs = [e.cost for e in res.events]
        nonmonotone += any(b >= a for a, b in zip(costs, costs[1:]))
        paths += len(res.events)
    identical = all(csv_bytes(run_campaign(spec)) == csv_bytes(campaign(name)[0]) for name, spec in CAMPAIGNS.items())
    ok = invalid == 0 and nonmonotone == 0 and identical
    verdict(
        10, ok, f"{paths} reported paths, {invalid} failed dense re-validation, "
        f"{nonmonotone} runs with non-decreasing costs, rerun CSVs byte-identical={identical}",
    )


# -- 11: sampler concentration -----------------------------------------------------------------


def _distance_to_obstacles(problem, X):
    d = np.full(len(X), math.inf)
    for lo, hi in zip(problem.obstacle_lo, problem.obstacle_hi):
        gap = np.maximum(np.maximum(lo - X, X - hi), 0.0)
        d = np.minimum(d, np.linalg.norm(gap, axis=1))
    return d


def test_criterion_11_adaptive_sampler_concentration():
    p = make_scenario("FG", 2)
    checker = CollisionChecker(p)
    rng = np.random.default_rng(1111)
    cfg = SamplerConfig(batch_size=100)
    delta = cfg.sigma_for(p)
    adaptive = []
    while sum(len(a) for a in adaptive) < 10_000:
        adaptive.append(sample_adaptive_batch(SampleContext(p), cfg, checker, rng).points)
    A = np.vstack(adaptive)[:10_000]
    uniform = []
    while sum(len(u) for u in uniform) < 10_000:
        X = sample_uniform(p, rng, 1000)
        uniform.append(X[checker.valid_points(X)])
    U = np.vstack(uniform)[:10_000]
    fa = float(np.mean(_distance_to_obstacles(p, A) < delta))
    fu = float(np.mean(_distance_to_obstacles(p, U) < delta))
    ratio = fa / fu
    verdict(11, ratio >= 1.5, f"within {delta:g} of an obstacle: adaptive {fa:.4f} vs uniform {fu:.4f}, ratio {ratio:.3f}")
