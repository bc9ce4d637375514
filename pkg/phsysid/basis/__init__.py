"""
Candidate-term libraries for Hamiltonians, forces and baseline right-hand sides
"""

from .library import (
    Term,
    BasisLibrary,
    MONOMIAL,
    TRIG,
    build_library,
    build_polynomial_library,
    polynomial_library_size,
    bsi_library_size,
    eval_library,
    eval_library_gradient,
    term_to_string,
    term_label,
)

__all__ = [
    'Term',
    'BasisLibrary',
    'MONOMIAL',
    'TRIG',
    'build_library',
    'build_polynomial_library',
    'polynomial_library_size',
    'bsi_library_size',
    'eval_library',
    'eval_library_gradient',
    'term_to_string',
    'term_label',
]
