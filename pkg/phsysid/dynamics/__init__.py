"""
ODE abstraction, benchmark systems and data generation
"""

from .types import Dataset, OdeSystem, StateVector, Trajectory, to_state_vector
from .systems import (
    BENCHMARKS,
    DEFAULT_TANK_PIPES,
    GRAVITY,
    canonical_structure,
    eval_rhs,
    incidence_matrix,
    make_benchmark,
    polynomial_gradient,
    polynomial_value,
    rhs_polynomial_terms,
)
from .data import generate_dataset, load_dataset, save_dataset, two_point_noise_std

__all__ = [
    'Dataset',
    'OdeSystem',
    'StateVector',
    'Trajectory',
    'to_state_vector',
    'BENCHMARKS',
    'DEFAULT_TANK_PIPES',
    'GRAVITY',
    'canonical_structure',
    'eval_rhs',
    'incidence_matrix',
    'make_benchmark',
    'polynomial_gradient',
    'polynomial_value',
    'rhs_polynomial_terms',
    'generate_dataset',
    'load_dataset',
    'save_dataset',
    'two_point_noise_std',
]
