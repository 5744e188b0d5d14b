import json
import math
import os
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from mitstar.bench.campaign import (
    CSV_COLUMNS,
    TAG_INSTANCE,
    TAG_RUN,
    CampaignSpec,
    RunRecord,
    default_max_time,
    derive_seed,
    plan_tasks,
    resolve_workers,
    run_campaign,
)
from mitstar.bench.outputs import (
    cost_trace,
    emit_outputs,
    format_float,
    read_runs_csv,
    write_runs_csv,
)
from mitstar.bench.stats import compute_stats, improvement, median, median_ci, median_ci_ranks, stats_document
from mitstar.validation import ConfigError


def record(**kw):
    base = dict(
        scenario="fg", dim=2, instance_seed=0, planner="mitstar", run_seed=1, success=True,
        t_init=0.1, c_init=1.0, t_final=1.0, c_final=0.9, n_samples=10, n_full_checks=3, n_sparse_checks=5,
    )
    base.update(kw)
    return RunRecord(**base)


# -- statistics --------------------------------------------------------------------------


def test_median_odd():
    assert median([1, 2, 3, 4, 5]) == 3


def test_median_with_half_failures():
    assert median([1, 1, math.inf, math.inf]) == math.inf
    recs = [record(c_final=c, success=math.isfinite(c), run_seed=i) for i, c in enumerate([1, 1, math.inf, math.inf])]
    s = next(iter(compute_stats(recs).values()))
    assert s.median_c_final == math.inf and s.success_rate == 0.5


def test_median_even_finite_averages():
    assert median([1, 2, 3, 10]) == 2.5


def test_median_empty_raises():
    with pytest.raises(ValueError):
        median([])


def test_improvement_example():
    assert improvement(0.0068, 0.0053) == pytest.approx(22.06, abs=0.05)


def test_improvement_degenerate_baseline():
    assert math.isnan(improvement(0.0, 1.0)) and math.isnan(improvement(math.inf, 1.0))


@given(st.integers(1, 400), st.sampled_from([0.9, 0.95, 0.99]))
def test_ci_ranks_match_exact_binomial(n, conf):
    ranks = median_ci_ranks(n, conf)
    alpha = Fraction(1) - Fraction(conf).limit_denominator(1000)
    # The largest l with P(B <= l - 1) <= alpha / 2.
    l = 0
    while l + 1 <= n and oracles.binom_tail_le(l, n) <= alpha / 2:
        l += 1
    if l < 1:
        assert ranks is None
    else:
        assert ranks == (l, n + 1 - l)
        coverage = 1 - 2 * oracles.binom_tail_le(l - 1, n)
        assert coverage >= Fraction(conf).limit_denominator(1000)


def test_ci_for_small_sample_is_absent():
    assert median_ci([1.0, 2.0, 3.0]) is None


@given(st.lists(st.floats(0, 100), min_size=20, max_size=200))
def test_ci_brackets_median(values):
    lo, hi = median_ci(values)
    assert lo <= median(values) <= hi


def test_empty_group_is_absent():
    assert compute_stats([]) == {}
    assert stats_document({}) == {"groups": [], "improvements": []}


def test_stats_document_reports_improvement_and_inf():
    recs = [record(planner="baseline-off", t_init=0.0068, run_seed=0), record(planner="mitstar", t_init=0.0053, run_seed=0)]
    recs.append(record(planner="rrt-connect", success=False, t_init=math.inf, c_init=math.inf, c_final=math.inf))
    doc = json.loads(json.dumps(stats_document(compute_stats(recs))))
    imp = {r["planner"]: r["t_init_improvement_pct"] for r in doc["improvements"]}
    assert imp["mitstar"] == pytest.approx(22.06, abs=0.05)
    inf_group = [g for g in doc["groups"] if g["planner"] == "rrt-connect"][0]
    assert inf_group["median_t_init"] == "inf"


# -- seeds and specs ---------------------------------------------------------------------


def test_seed_streams_are_distinct():
    runs = {derive_seed(0, TAG_RUN, i) for i in range(1000)}
    inst = {derive_seed(0, TAG_INSTANCE, i) for i in range(1000)}
    assert len(runs) == 1000 and not runs & inst


def test_different_bases_give_unrelated_seed_sets():
    a = {derive_seed(0, TAG_RUN, i) for i in range(100)}
    b = {derive_seed(1, TAG_RUN, i) for i in range(100)}
    assert not a & b


@given(st.integers(0, 2**62), st.integers(0, 10**6))
def test_seed_is_nonnegative_63_bit(base, k):
    s = derive_seed(base, TAG_RUN, k)
    assert 0 <= s < 2**63


def test_scenario_budget_table():
    assert default_max_time("fg", 4) == 0.08
    assert default_max_time("FG", 4) == 0.08
    assert default_max_time("fg", 2) == 1.0
    tasks = plan_tasks(CampaignSpec(family="fg", dims=(4,), runs=2))
    assert all(t.max_time == 0.08 for t in tasks)


@pytest.mark.parametrize(
    "kw",
    [dict(family="xx"), dict(dims=(3,)), dict(dims=()), dict(planners=("bit",)), dict(planners=()), dict(runs=0),
     dict(max_time=-1.0), dict(max_time=math.inf), dict(instances=0), dict(clock="cpu"),
     dict(scenario_file="/nonexistent.json")],
)
def test_invalid_spec_rejected_before_running(kw):
    with pytest.raises(ConfigError):
        run_campaign(CampaignSpec(**kw))


def test_worker_override(monkeypatch):
    monkeypatch.setenv("BENCH_WORKERS", "3")
    assert resolve_workers(1) == 3
    monkeypatch.setenv("BENCH_WORKERS", "x")
    with pytest.raises(ConfigError):
        resolve_workers(1)
    monkeypatch.delenv("BENCH_WORKERS")
    with pytest.raises(ConfigError):
        resolve_workers(0)


def test_rr_instances_use_instance_stream():
    tasks = plan_tasks(CampaignSpec(family="rr", dims=(2,), runs=1, instances=3))
    assert [t.instance_seed for t in tasks] == [derive_seed(0, TAG_INSTANCE, k) for k in range(3)]


# -- outputs -------------------------------------------------------------------------


def test_empty_records_give_header_only_csv(tmp_path):
    written = emit_outputs([], {}, str(tmp_path))
    assert (tmp_path / "runs.csv").read_text() == ",".join(CSV_COLUMNS) + "\n"
    assert json.loads((tmp_path / "stats.json").read_text()) == {"groups": [], "improvements": []}
    assert not any(p.endswith(".svg") for p in written)


def test_single_run_outputs(tmp_path):
    recs = run_campaign(CampaignSpec(family="fg", dims=(2,), runs=1, max_time=0.3))
    written = emit_outputs(recs, compute_stats(recs), str(tmp_path))
    lines = (tmp_path / "runs.csv").read_text().splitlines()
    assert len(lines) == 2
    svg = [p for p in written if p.endswith(".svg")]
    assert len(svg) == 1
    text = open(svg[0]).read()
    assert text.count(">mitstar<") == 2  # legend entry and bar label
    events = json.loads((tmp_path / "events.json").read_text())
    assert len(events) == 1 and events[0]["events"][0]["kind"] == "initial"
    assert "waypoints" in events[0]["events"][0]


finite_or_inf = st.one_of(st.floats(0, 1e6, allow_nan=False), st.just(math.inf))


@given(
    st.lists(
        st.tuples(finite_or_inf, finite_or_inf, st.floats(0, 1e6), finite_or_inf, st.integers(0, 2**63 - 1), st.booleans()),
        max_size=10,
    )
)
def test_csv_round_trip_is_lossless(rows):
    import tempfile

    recs = [
        record(t_init=a, c_init=b, t_final=c, c_final=d, run_seed=s, success=ok, planner="mitstar-as")
        for a, b, c, d, s, ok in rows
    ]
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "runs.csv")
        write_runs_csv(recs, path)
        assert read_runs_csv(path) == recs


def test_format_float():
    assert format_float(math.inf) == "inf"
    assert float(format_float(0.1 + 0.2)) == 0.1 + 0.2


def test_cost_trace_steps():
    t = np.array([0.0, 0.5, 1.0, 2.0])
    tr = cost_trace([{"time": 0.5, "cost": 3.0}, {"time": 1.5, "cost": 2.0}], t)
    assert tr.tolist() == [math.inf, 3.0, 3.0, 2.0]


def test_campaign_is_deterministic(tmp_path):
    spec = CampaignSpec(family="ge", dims=(2,), planners=("mitstar", "rrt-connect"), runs=5, max_time=0.2)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_runs_csv(run_campaign(spec), str(a))
    write_runs_csv(run_campaign(spec), str(b))
    assert a.read_bytes() == b.read_bytes()


def test_parallel_matches_serial(tmp_path, monkeypatch):
    spec = CampaignSpec(family="fg", dims=(2,), runs=4, max_time=0.2, workers=1)
    serial = run_campaign(spec)
    monkeypatch.setenv("BENCH_WORKERS", "2")
    parallel = run_campaign(spec)
    assert serial == parallel


def test_scenario_file_campaign(tmp_path):
    from mitstar.space import make_scenario

    f = tmp_path / "gap.json"
    make_scenario("FG", 2).save(f)
    recs = run_campaign(CampaignSpec(scenario_file=str(f), runs=1, max_time=0.3))
    assert recs[0].scenario == "gap" and recs[0].success


def test_dw4_full_planner_beats_all_off_on_initial_time():
    spec = CampaignSpec(
        family="dw", dims=(4,), planners=("mitstar", "baseline-off"), runs=50, max_time=2.0, stop_on_initial=True
    )
    stats = compute_stats(run_campaign(spec))
    full = stats[("dw", 4, 0, "mitstar")].median_t_init
    off = stats[("dw", 4, 0, "baseline-off")].median_t_init
    assert full < off
