"""Utility modules for measure-flow-lab."""

from measure_flow_lab.utils.config import ExperimentConfig, Settings, parse_config

__all__ = [
    "ExperimentConfig",
    "Settings",
    "parse_config",
]
