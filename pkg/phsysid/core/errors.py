"""
Error Hierarchy
Every failure raised by the package derives from PhsysidError
"""

from typing import Any, Optional


class PhsysidError(Exception):
    """Base class for all package errors"""


class ConfigError(PhsysidError, ValueError):
    """Invalid experiment configuration or parameter"""


class DimensionError(PhsysidError, ValueError):
    """State, coefficient or parameter vector has the wrong length"""


class UnknownBenchmarkError(PhsysidError, KeyError):
    """Requested benchmark system does not exist"""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class SimulationError(PhsysidError):
    """
    Non-finite state encountered while simulating

    Carries the trajectory index and time of the failure
    """

    def __init__(self, message: str, trajectory: Optional[int] = None, time: Optional[float] = None):
        super().__init__(message)
        self.trajectory = trajectory
        self.time = time


class SchemeUnavailableError(PhsysidError):
    """Integration scheme cannot be applied to the given input"""


class AutodiffError(PhsysidError):
    """Tape recording or reverse pass failure"""

    def __init__(self, message: str, node: Optional[int] = None):
        super().__init__(message)
        self.node = node


class TrainingDivergedError(PhsysidError):
    """Loss became non-finite; the history up to the failure is attached"""

    def __init__(self, message: str, history: Any = None):
        super().__init__(message)
        self.history = history
