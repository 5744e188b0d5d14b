"""Benchmark campaigns, statistics and output writers."""
from .campaign import CSV_COLUMNS, CampaignSpec, RunRecord, derive_seed, run_campaign
from .outputs import emit_outputs, read_runs_csv, write_runs_csv
from .stats import compute_stats, improvement, median, median_ci

__all__ = [
    "CSV_COLUMNS",
    "CampaignSpec",
    "RunRecord",
    "compute_stats",
    "derive_seed",
    "emit_outputs",
    "improvement",
    "median",
    "median_ci",
    "read_runs_csv",
    "run_campaign",
    "write_runs_csv",
]
