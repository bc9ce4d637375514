"""
Config Validation
Collects every problem of an experiment config instead of stopping at the first
"""

from typing import Any, Dict, List

from loguru import logger
from pydantic import ValidationError

from phsysid.core.errors import PhsysidError
from phsysid.dynamics.systems import make_benchmark
from phsysid.dynamics.types import OdeSystem
from phsysid.integrators import get_scheme

from .config import ExperimentConfig, _read_json, format_validation_error

GRID_TOL = 1e-9


def _result(check: str, messages: List[str]) -> Dict[str, Any]:
    return {
        'check': check,
        'passed': not messages,
        'message': '; '.join(messages) if messages else 'OK',
    }


def _is_multiple(value: float, step: float) -> bool:
    count = round(value / step)
    return count >= 1 and abs(count * step - value) <= GRID_TOL * max(1.0, abs(value))


def _check_time_grids(config: ExperimentConfig) -> Dict[str, Any]:
    """Data and evaluation horizons must be whole numbers of steps"""
    messages = []
    if not _is_multiple(config.data.t_end, config.data.dt):
        messages.append(f"data.t_end {config.data.t_end} is not a multiple of data.dt {config.data.dt}")
    ev = config.evaluation
    if not _is_multiple(ev.t_end, config.eval_dt):
        messages.append(f"evaluation.t_end {ev.t_end} is not a multiple of dt_out {config.eval_dt}")
    if ev.extrapolation_init is not None and not _is_multiple(ev.extrapolation_t_end, config.eval_dt):
        messages.append(
            f"evaluation.extrapolation_t_end {ev.extrapolation_t_end} is not a multiple of dt_out {config.eval_dt}"
        )
    if ev.init_low >= ev.init_high:
        messages.append(f"evaluation.init_low {ev.init_low} must be below init_high {ev.init_high}")
    return _result('Time grids', messages)


def _check_integrator(config: ExperimentConfig, system: OdeSystem) -> Dict[str, Any]:
    messages = []
    scheme = get_scheme(config.hyper.integrator)
    # sparse regression fits finite differences and never uses the scheme
    if config.model != "sindy":
        if not scheme.available:
            messages.append(f"integrator '{scheme.name}' has no tableau and cannot be trained with")
        if scheme.requires_separable and system.separable_split is None:
            messages.append(f"integrator '{scheme.name}' needs a separable system, {system.name} is not")
    return _result('Integrator', messages)


def _check_model(config: ExperimentConfig, system: OdeSystem) -> Dict[str, Any]:
    messages = []
    d = system.dimension
    if config.model in ("phsi", "phsi_hybrid") and system.structure is None:
        messages.append(f"{system.name} has no structure matrix for a pseudo-Hamiltonian model")
    if config.model in ("phsi", "phsi_hybrid") and (config.hamiltonian.trig.sin or config.hamiltonian.trig.cos):
        messages.append("hamiltonian library must be polynomial")
    if config.model == "phsi_hybrid" and config.force.kind != "mlp":
        messages.append(f"model phsi_hybrid needs force.kind 'mlp', got '{config.force.kind}'")
    components = config.force.components
    if components is not None:
        bad = [c for c in components if not 0 <= c < d]
        if bad:
            messages.append(f"force.components {bad} outside state dimension {d}")
        if len(set(components)) != len(components):
            messages.append(f"force.components {components} has duplicates")
    if config.force.kind == "mlp" and any(width < 1 for width in config.force.hidden):
        messages.append(f"force.hidden widths must be positive, got {config.force.hidden}")
    return _result('Model', messages)


def _check_initial_states(config: ExperimentConfig, system: OdeSystem) -> Dict[str, Any]:
    messages = []
    ev = config.evaluation
    for field in ("example_init", "extrapolation_init", "force_tracking_init"):
        value = getattr(ev, field)
        if value is not None and len(value) != system.dimension:
            messages.append(f"evaluation.{field} has {len(value)} entries, {system.name} has dimension {system.dimension}")
    if ev.force_tracking_init is not None and config.force.kind == "none":
        messages.append("evaluation.force_tracking_init is set but the model has no force")
    return _result('Initial states', messages)


def validate_config(path: str) -> Dict[str, Any]:
    """
    Load a config file and report every problem found

    Args:
        path: JSON config file

    Returns:
        Dict with 'valid', 'problems' (list of messages) and 'checks'
    """
    try:
        doc = _read_json(path)
    except PhsysidError as exc:
        return {'valid': False, 'problems': [str(exc)], 'checks': []}
    try:
        config = ExperimentConfig.model_validate(doc)
    except ValidationError as exc:
        problems = format_validation_error(exc)
        logger.warning(f"Config {path} failed schema validation with {len(problems)} problems")
        return {'valid': False, 'problems': problems, 'checks': []}

    try:
        system = make_benchmark(config.system.name, config.system.params)
    except PhsysidError as exc:
        return {'valid': False, 'problems': [f"system: {exc}"], 'checks': []}

    checks = [
        _check_time_grids(config),
        _check_integrator(config, system),
        _check_model(config, system),
        _check_initial_states(config, system),
    ]
    problems = [f"{c['check']}: {c['message']}" for c in checks if not c['passed']]
    if problems:
        logger.warning(f"Config validation: {len(problems)} items need attention")
        for item in problems:
            logger.warning(f"- {item}")
    else:
        logger.info(f"Config {path} is valid")
    return {'valid': not problems, 'problems': problems, 'checks': checks}
