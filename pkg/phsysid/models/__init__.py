"""
Trainable right-hand-side models: pseudo-Hamiltonian, baselines and the neural force
"""

from .mlp import DEFAULT_HIDDEN, MlpForce, build_mlp_force, mlp_forward, network_input
from .phsi import (
    FORCE_KINDS,
    EquationEntry,
    EquationReport,
    PseudoHamiltonianModel,
    build_phsi_model,
    extract_equations,
    init_phsi_params,
    phsi_rhs,
    remove_external_force,
)
from .baseline import (
    BaselineModel,
    augment_with_time,
    baseline_equations,
    baseline_rhs,
    baseline_truth,
    build_baseline_model,
    sindy_fit,
)
from .persistence import load_model, model_from_dict, model_to_dict, save_model

__all__ = [
    'DEFAULT_HIDDEN',
    'MlpForce',
    'build_mlp_force',
    'mlp_forward',
    'network_input',
    'FORCE_KINDS',
    'EquationEntry',
    'EquationReport',
    'PseudoHamiltonianModel',
    'build_phsi_model',
    'extract_equations',
    'init_phsi_params',
    'phsi_rhs',
    'remove_external_force',
    'BaselineModel',
    'augment_with_time',
    'baseline_equations',
    'baseline_rhs',
    'baseline_truth',
    'build_baseline_model',
    'sindy_fit',
    'load_model',
    'model_from_dict',
    'model_to_dict',
    'save_model',
]
