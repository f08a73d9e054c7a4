"""Experiment configuration, orchestration and reporting."""

from .config import ExperimentConfig, fingerprint, parse_config, serialize_config
from .output import emit_svg_plot, read_csv, write_csv
from .runner import RunResult, run_experiment, run_single

__all__ = [
    "ExperimentConfig", "RunResult", "emit_svg_plot", "fingerprint", "parse_config",
    "read_csv", "run_experiment", "run_single", "serialize_config", "write_csv",
]
