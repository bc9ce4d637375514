"""
Tape-based reverse-mode differentiation over numpy arrays
"""

from .tape import Tape, Var, Node, SUPPORTED_OPS
from .grad import grad, evaluate, finite_diff_check
from . import ops

__all__ = [
    'Tape',
    'Var',
    'Node',
    'SUPPORTED_OPS',
    'grad',
    'evaluate',
    'finite_diff_check',
    'ops',
]
