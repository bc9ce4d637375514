"""
Discretization schemes, single steps and reference simulation
"""

from .schemes import (
    C1,
    C2,
    SCHEMES,
    ButcherTableau,
    IntegratorScheme,
    get_scheme,
    psi,
    scheme_residual,
)
from .stepper import (
    EXPONENTIAL_GROWTH,
    HARMONIC_OSCILLATOR,
    ConvergenceProblem,
    StepResult,
    convergence_order,
    prk4_step,
    step,
)
from .reference import reference_simulate, simulate_batch

__all__ = [
    'C1',
    'C2',
    'SCHEMES',
    'ButcherTableau',
    'IntegratorScheme',
    'get_scheme',
    'psi',
    'scheme_residual',
    'EXPONENTIAL_GROWTH',
    'HARMONIC_OSCILLATOR',
    'ConvergenceProblem',
    'StepResult',
    'convergence_order',
    'prk4_step',
    'step',
    'reference_simulate',
    'simulate_batch',
]
