"""CSV, JSON and SVG outputs of a campaign."""
from __future__ import annotations

import csv
import json
import math
import os

import numpy as np

from .campaign import CSV_COLUMNS, RunRecord
from .stats import GroupStats, median, median_ci, stats_document

_INT_COLS = {"dim", "instance_seed", "run_seed", "n_samples", "n_full_checks", "n_sparse_checks"}
_FLOAT_COLS = {"t_init", "c_init", "t_final", "c_final"}


def format_float(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _cell(name, value) -> str:
    if name == "success":
        return "true" if value else "false"
    if name in _FLOAT_COLS:
        return format_float(float(value))
    return str(value)


def _parse(name, text):
    if name == "success":
        if text not in ("true", "false"):
            raise ValueError(f"bad success value {text!r}")
        return text == "true"
    if name in _FLOAT_COLS:
        return float(text)
    if name in _INT_COLS:
        return int(text)
    return text


def _ensure_dir(path: str):
    d = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(d, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {d}: {exc}") from exc


def write_runs_csv(records, path: str):
    _ensure_dir(path)
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for r in records:
                w.writerow([_cell(c, getattr(r, c)) for c in CSV_COLUMNS])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_runs_csv(path: str) -> list[RunRecord]:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
                raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
            return [RunRecord(**{c: _parse(c, row[c]) for c in CSV_COLUMNS}) for row in reader]
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc


def write_json(doc, path: str):
    _ensure_dir(path)
    try:
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def write_stats_json(stats: dict[tuple, GroupStats], path: str, baseline: str = "baseline-off"):
    write_json(stats_document(stats, baseline), path)


def write_events_json(records, path: str):
    doc = [
        {
            "scenario": r.scenario,
            "dim": r.dim,
            "instance_seed": r.instance_seed,
            "planner": r.planner,
            "run_seed": r.run_seed,
            "events": r.events,
        }
        for r in records
    ]
    write_json(doc, path)


# -- plots -----------------------------------------------------------------------


def cost_trace(events, times: np.ndarray) -> np.ndarray:
    """Step-interpolated best cost at each time (``inf`` before the first event)."""
    out = np.full(times.shape, math.inf)
    for e in events:
        out[times >= e["time"]] = e["cost"]
    return out


def plot_scenario(records, path: str, title: str = ""):
    """Median cost over time with a confidence band per planner, plus a
    success-rate bar chart."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    _ensure_dir(path)
    planners = sorted({r.planner for r in records})
    t_end = max([r.t_final for r in records if math.isfinite(r.t_final)] + [1e-9])
    times = np.linspace(0.0, t_end, 200)
    with plt.rc_context({"svg.hashsalt": "mitstar", "svg.fonttype": "none"}):
        fig, (ax_c, ax_s) = plt.subplots(1, 2, figsize=(9, 3.5), gridspec_kw={"width_ratios": [3, 1]})
        for k, planner in enumerate(planners):
            rs = [r for r in records if r.planner == planner]
            traces = np.array([cost_trace(r.events, times) for r in rs])
            med = np.array([median(col) for col in traces.T])
            band = [median_ci(col) for col in traces.T]
            lo = np.array([b[0] if b else np.nan for b in band])
            hi = np.array([b[1] if b else np.nan for b in band])
            color = f"C{k}"
            shown = np.where(np.isfinite(med), med, np.nan)
            ax_c.step(times, shown, where="post", color=color, label=planner)
            ok = np.isfinite(lo) & np.isfinite(hi)
            if ok.any():
                ax_c.fill_between(times, np.where(ok, lo, np.nan), np.where(ok, hi, np.nan), step="post", color=color, alpha=0.2)
            ax_s.bar(k, 100.0 * sum(r.success for r in rs) / len(rs), color=color)
        ax_c.set_xlabel("time [s]")
        ax_c.set_ylabel("median cost")
        ax_c.set_title(title)
        if planners:
            ax_c.legend(fontsize=7)
        ax_s.set_xticks(range(len(planners)))
        ax_s.set_xticklabels(planners, rotation=45, ha="right", fontsize=7)
        ax_s.set_ylim(0, 100)
        ax_s.set_ylabel("success [%]")
        fig.tight_layout()
        try:
            fig.savefig(path, format="svg", metadata={"Date": None})
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        finally:
            plt.close(fig)


def emit_outputs(records, stats: dict[tuple, GroupStats], out_dir: str, plots: bool = True) -> list[str]:
    """Writes runs.csv, stats.json, events.json and one SVG per scenario setting."""
    written = []
    p = os.path.join(out_dir, "runs.csv")
    write_runs_csv(records, p)
    written.append(p)
    p = os.path.join(out_dir, "stats.json")
    write_stats_json(stats, p)
    written.append(p)
    p = os.path.join(out_dir, "events.json")
    write_events_json(records, p)
    written.append(p)
    if plots:
        settings = sorted({(r.scenario, r.dim, r.instance_seed) for r in records})
        for scenario, dim, inst in settings:
            rs = [r for r in records if (r.scenario, r.dim, r.instance_seed) == (scenario, dim, inst)]
            name = f"{scenario}-r{dim}" + (f"-{inst}" if inst else "") + ".svg"
            p = os.path.join(out_dir, "plots", name)
            plot_scenario(rs, p, title=f"{scenario.upper()} in R^{dim}")
            written.append(p)
    return written
