"""Experiment harness: configuration, file formats, orchestration, CLI."""

from .config import ExperimentConfig
from .io import ingest_csv, recompute_summary, verify_run, write_report, write_stream_csv
from .runner import generate_streams, run_experiment, run_one, run_sweep

__all__ = [
    "ExperimentConfig",
    "ingest_csv",
    "recompute_summary",
    "verify_run",
    "write_report",
    "write_stream_csv",
    "generate_streams",
    "run_experiment",
    "run_one",
    "run_sweep",
]
