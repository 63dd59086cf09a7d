"""Experiment runner: configs, nested CV, reports, model files and the CLI."""

from .config import ExperimentConfig, load_config, parse_config
from .experiment import ExperimentError, ExperimentResult, FoldResult, run_experiment
from .persistence import load_model, save_model
from .predict import predict_batch
from .report import emit_report, load_result, write_result

__all__ = [
    "ExperimentConfig", "ExperimentError", "ExperimentResult", "FoldResult", "emit_report",
    "load_config", "load_model", "load_result", "parse_config", "predict_batch", "run_experiment",
    "save_model", "write_result",
]
