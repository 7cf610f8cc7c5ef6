"""Config-driven experiment runner."""

from .config import ExperimentConfig, load_config, memory_estimate_mb, parse_config
from .main import build_parser, main

__all__ = ["ExperimentConfig", "build_parser", "load_config", "main", "memory_estimate_mb", "parse_config"]
