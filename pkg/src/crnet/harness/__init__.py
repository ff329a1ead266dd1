"""Configuration, experiment runners, reports and the command line."""

from .config import ConfigError, ExperimentConfig, default_config, load_config
from .experiments import RunReport, run

__all__ = ["ConfigError", "ExperimentConfig", "RunReport", "default_config", "load_config", "run"]
