"""
Core components shared by every subsystem
"""

from .errors import (
    PhsysidError,
    ConfigError,
    DimensionError,
    UnknownBenchmarkError,
    SimulationError,
    SchemeUnavailableError,
    AutodiffError,
    TrainingDivergedError,
)
from .settings import Settings, get_settings
from .logging_setup import configure_logging, add_progress_sink, progress_logger

__all__ = [
    'PhsysidError',
    'ConfigError',
    'DimensionError',
    'UnknownBenchmarkError',
    'SimulationError',
    'SchemeUnavailableError',
    'AutodiffError',
    'TrainingDivergedError',
    'Settings',
    'get_settings',
    'configure_logging',
    'add_progress_sink',
    'progress_logger',
]
