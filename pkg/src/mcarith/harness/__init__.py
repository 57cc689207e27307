"""Experiment configuration, runners, output writers and CLI."""

from .config import ConfigError, ExperimentConfig, load_config
from .experiments import ErrorRateRecord, run_arithmetic_demo, run_cir_validation, run_er_experiment, snr_to_scale

__all__ = [
    "ConfigError",
    "ErrorRateRecord",
    "ExperimentConfig",
    "load_config",
    "run_arithmetic_demo",
    "run_cir_validation",
    "run_er_experiment",
    "snr_to_scale",
]
