from .config import (AGENT_TYPES, ConfigLoadError, ExperimentConfig, load_config, rate_constant,
                     setting_of)
from .probes import ScalingResult, alpha_sweep, growth_ratio, is_nonincreasing, scaling_probe
from .reference import REFERENCE_NOTE, SETTINGS, reference_curve, reference_params
from .runner import (CSV_COLUMNS, WORKERS_ENV, AggregateSummary, RunStats, aggregate, read_run_csv,
                     recompute_columns, recount_violations, run_csv_name, run_experiment, run_many, run_seed,
                     trace_stats, write_run_csv, write_summary)

__all__ = [
    "AGENT_TYPES", "ConfigLoadError", "ExperimentConfig", "load_config", "rate_constant", "setting_of",
    "ScalingResult", "alpha_sweep", "growth_ratio", "is_nonincreasing", "scaling_probe",
    "REFERENCE_NOTE", "SETTINGS", "reference_curve", "reference_params",
    "CSV_COLUMNS", "WORKERS_ENV", "AggregateSummary", "RunStats", "aggregate", "read_run_csv",
    "recompute_columns", "recount_violations", "run_csv_name", "run_experiment", "run_many", "run_seed",
    "trace_stats", "write_run_csv", "write_summary",
]
