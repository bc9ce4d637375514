"""
Experiment presets, runs, sweeps and report emission
"""

from .config import (
    BUDGETS,
    MODEL_KINDS,
    PRESETS,
    BaselineSpec,
    DataSpec,
    EvalSpec,
    ExperimentConfig,
    ForceSpec,
    LibrarySpec,
    SystemSpec,
    TrigSpec,
    apply_budget,
    apply_overrides,
    load_config,
    parse_config,
    preset,
    save_config,
)
from .evaluation import (
    ErrorSummary,
    as_rhs,
    evaluation_inits,
    force_tracking_error,
    l2_errors,
    simulate_pair,
    trajectory_error,
    trajectory_errors,
)
from .runner import (
    CoefficientRow,
    ExperimentReport,
    build_model,
    evaluate_model,
    exclusion_stats,
    fit_model,
    friction_ratios,
    run_experiment,
)
from .sweeps import SweepReport, integrator_sweep, reg_prune_sweep, reg_separation_sweep, repeat_seed
from .reports import FORMATS, bar_svg, emit_report, heatmap_svg, trajectory_svg
from .validation import validate_config

__all__ = [
    'BUDGETS',
    'MODEL_KINDS',
    'PRESETS',
    'BaselineSpec',
    'DataSpec',
    'EvalSpec',
    'ExperimentConfig',
    'ForceSpec',
    'LibrarySpec',
    'SystemSpec',
    'TrigSpec',
    'apply_budget',
    'apply_overrides',
    'load_config',
    'parse_config',
    'preset',
    'save_config',
    'ErrorSummary',
    'as_rhs',
    'evaluation_inits',
    'force_tracking_error',
    'l2_errors',
    'simulate_pair',
    'trajectory_error',
    'trajectory_errors',
    'CoefficientRow',
    'ExperimentReport',
    'build_model',
    'evaluate_model',
    'exclusion_stats',
    'fit_model',
    'friction_ratios',
    'run_experiment',
    'SweepReport',
    'integrator_sweep',
    'reg_prune_sweep',
    'reg_separation_sweep',
    'repeat_seed',
    'FORMATS',
    'bar_svg',
    'emit_report',
    'heatmap_svg',
    'trajectory_svg',
    'validate_config',
]
