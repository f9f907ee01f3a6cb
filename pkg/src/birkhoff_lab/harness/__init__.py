"""Experiment configuration, runners and the command line."""

from birkhoff_lab.harness.config import ConfigError, ExperimentConfig
from birkhoff_lab.harness.experiments import RunReport, emit_plot_data, run_chains, run_experiment

__all__ = ["ConfigError", "ExperimentConfig", "RunReport", "emit_plot_data", "run_chains", "run_experiment"]
