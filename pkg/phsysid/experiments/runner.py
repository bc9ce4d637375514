"""
Experiment Runner
Generate data, fit the configured model, evaluate it and assemble the report
"""

import math
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from loguru import logger

from phsysid.basis import MONOMIAL, build_library, term_label
from phsysid.core.errors import ConfigError
from phsysid.dynamics import generate_dataset, make_benchmark
from phsysid.dynamics.types import Dataset, OdeSystem
from phsysid.models import (
    BaselineModel,
    PseudoHamiltonianModel,
    baseline_equations,
    baseline_truth,
    build_baseline_model,
    build_phsi_model,
    extract_equations,
    sindy_fit,
)
from phsysid.training import TrainHistory, train

from .config import ExperimentConfig, apply_budget
from .evaluation import force_tracking_error, simulate_pair, trajectory_errors


def finite_or_none(value):
    """JSON-safe float: non-finite values become None"""
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


@dataclass
class CoefficientRow:
    term: str
    truth: Optional[float]
    learned: float

    @property
    def abs_error(self) -> Optional[float]:
        return None if self.truth is None else abs(self.learned - self.truth)

    def to_dict(self) -> Dict[str, Any]:
        return {"term": self.term, "truth": self.truth, "learned": self.learned, "abs_error": self.abs_error}


@dataclass
class ExperimentReport:
    """Outcome of one run; everything but wall_clock is deterministic for a fixed config"""

    name: str
    model_kind: str
    config: Dict[str, Any]
    coefficients: List[CoefficientRow]
    errors: Dict[str, Any]
    equations: str
    extrapolation_error: Optional[float] = None
    force_tracking_error: Optional[float] = None
    exclusion: Optional[Dict[str, Any]] = None
    friction_ratios: Optional[List[float]] = None
    training: Optional[Dict[str, Any]] = None
    trajectory: Optional[Dict[str, Any]] = None
    wall_clock: Optional[float] = None
    model: Any = field(default=None, repr=False)
    history: Optional[TrainHistory] = field(default=None, repr=False)

    @property
    def mean_error(self) -> float:
        mean = self.errors.get("mean")
        return float("inf") if mean is None else mean

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "model_kind": self.model_kind,
            "config": self.config,
            "coefficients": [row.to_dict() for row in self.coefficients],
            "errors": self.errors,
            "extrapolation_error": self.extrapolation_error,
            "force_tracking_error": self.force_tracking_error,
            "exclusion": self.exclusion,
            "friction_ratios": self.friction_ratios,
            "training": self.training,
            "equations": self.equations,
            "trajectory": self.trajectory,
        }


# Model construction ----------------------------------------------------------


def build_model(config: ExperimentConfig, system: OdeSystem):
    """Untrained model of the configured kind (None for sparse regression, which is fitted directly)"""
    names = tuple(system.variable_names)
    if config.model in ("phsi", "phsi_hybrid"):
        force = config.force
        if config.model == "phsi_hybrid" and force.kind != "mlp":
            raise ConfigError(f"model phsi_hybrid needs force.kind 'mlp', got '{force.kind}'")
        h = config.hamiltonian
        if h.trig.sin or h.trig.cos:
            raise ConfigError("hamiltonian library must be polynomial")
        force_library = None
        if force.kind == "symbolic":
            lib = force.library
            force_library = build_library(
                system.dimension, lib.degree, lib.include_constant, lib.trig.sin, lib.trig.cos, variable_names=names
            )
        return build_phsi_model(
            system,
            h.degree,
            include_constant=h.include_constant,
            force_kind=force.kind,
            force_library=force_library,
            force_components=force.components,
            mlp_hidden=tuple(force.hidden),
            damping=config.learn_damping,
            seed=config.hyper.seed,
        )
    if config.model == "bsi":
        lib = config.baseline.library
        return build_baseline_model(
            system, lib.degree, lib.include_constant, lib.trig.sin, lib.trig.cos, config.baseline.time_augmented
        )
    return None


def _sindy_library(config: ExperimentConfig, system: OdeSystem):
    lib = config.baseline.library
    if lib.trig.sin or lib.trig.cos:
        logger.info("Sparse regression uses the polynomial part of the baseline library only")
    names = tuple(system.variable_names) + (("t",) if config.baseline.time_augmented else ())
    return build_library(len(names), lib.degree, lib.include_constant, variable_names=names)


def fit_model(config: ExperimentConfig, system: OdeSystem, dataset: Dataset) -> Tuple[Any, Optional[TrainHistory]]:
    """
    Fit the configured model to a dataset

    Returns:
        (fitted model, training history or None for sparse regression)
    """
    if config.model == "sindy":
        model = sindy_fit(
            dataset,
            _sindy_library(config, system),
            threshold=config.baseline.threshold,
            sweeps=config.baseline.sweeps,
            time_augmented=config.baseline.time_augmented,
        )
        return model, None
    return train(build_model(config, system), dataset, config.hyper)


# Coefficient tables ------------------------------------------------------------


def _known_force(system: OdeSystem) -> bool:
    # truths exist for unforced systems and sine drives
    return system.force_truth is None or bool(system.force_params)


def _force_truth(system: OdeSystem, component: int, term, slot: str) -> Optional[float]:
    if not _known_force(system):
        return None
    if term.kind == MONOMIAL:
        return 0.0
    driven = bool(system.force_params) and component in system.force_components
    if driven and term.trig_shape == "sin":
        return system.force_params["alpha"] if slot == "amplitude" else system.force_params["omega"]
    # an absent wave has zero amplitude and no meaningful frequency
    return 0.0 if slot == "amplitude" else None


def _keep(truth: Optional[float], learned: float) -> bool:
    return learned != 0.0 or (truth is not None and truth != 0.0)


def phsi_coefficients(model: PseudoHamiltonianModel, system: OdeSystem) -> List[CoefficientRow]:
    """Learned H, damping and symbolic force coefficients next to their true values"""
    names = model.variable_names
    rows: List[CoefficientRow] = []
    h = model.params[model.h_slice]
    position = 0
    for term in model.h_library.terms:
        truth = system.hamiltonian_terms.get(tuple(term.exponents), 0.0) if term.kind == MONOMIAL else 0.0
        if _keep(truth, float(h[position])):
            rows.append(CoefficientRow(f"H:{term_label(term, names)}", truth, float(h[position])))
        position += term.n_params

    damping = model.params[model.damping_slice]
    for j, index in enumerate(model.damping_support):
        truth = None if system.damping_truth is None else float(system.damping_truth[index])
        rows.append(CoefficientRow(f"R:{names[index]}", truth, float(damping[j])))

    if model.force_kind == "symbolic":
        lib = model.force_library
        for k, index in enumerate(model.force_components):
            block = model.params[model.force_block(k)]
            position = 0
            for term in lib.terms:
                prefix = f"F_{names[index]}:{term_label(term, names)}"
                if term.kind == MONOMIAL:
                    truth = _force_truth(system, index, term, "coefficient")
                    if _keep(truth, float(block[position])):
                        rows.append(CoefficientRow(prefix, truth, float(block[position])))
                else:
                    amplitude, frequency = float(block[position]), float(block[position + 1])
                    truth_a = _force_truth(system, index, term, "amplitude")
                    if _keep(truth_a, amplitude):
                        rows.append(CoefficientRow(f"{prefix}:amplitude", truth_a, amplitude))
                        rows.append(CoefficientRow(
                            f"{prefix}:frequency", _force_truth(system, index, term, "frequency"), frequency
                        ))
                position += term.n_params
    return rows


def baseline_slot_labels(model: BaselineModel) -> List[str]:
    """One label per parameter slot of a baseline model"""
    lib = model.library
    names = lib.variable_names
    labels = [""] * model.n_params
    monomials = [t for t in lib.terms if t.kind == MONOMIAL]
    for j, term in enumerate(monomials):
        for i in range(model.dimension):
            labels[j * model.dimension + i] = f"g_{model.variable_names[i]}:{term_label(term, names)}"
    for i in range(model.dimension):
        start = model.trig_block(i).start
        for j, term in enumerate(lib.trig_terms):
            base = f"g_{model.variable_names[i]}:{term_label(term)}"
            labels[start + 2 * j] = f"{base}:amplitude"
            labels[start + 2 * j + 1] = f"{base}:frequency"
    return labels


def baseline_coefficients(model: BaselineModel, system: OdeSystem) -> List[CoefficientRow]:
    truth = baseline_truth(model, system)
    rows = []
    for slot, label in enumerate(baseline_slot_labels(model)):
        value = float(model.params[slot])
        reference = None if truth is None else float(truth[slot])
        if _keep(reference, value):
            rows.append(CoefficientRow(label, reference, value))
    return rows


def exclusion_stats(model: PseudoHamiltonianModel, system: OdeSystem) -> Dict[str, Any]:
    """How many true H terms were kept and how many spurious candidates were pruned to zero"""
    h = model.params[model.h_slice]
    active = model.active[model.h_slice]
    n_true = n_false = excluded = recovered = 0
    worst = 0.0
    position = 0
    for term in model.h_library.terms:
        if term.kind == MONOMIAL:
            truth = system.hamiltonian_terms.get(tuple(term.exponents), 0.0)
            value = float(h[position])
            if truth != 0.0:
                n_true += 1
                recovered += int(bool(active[position]) and value != 0.0)
                worst = max(worst, abs(value - truth))
            else:
                n_false += 1
                excluded += int(value == 0.0)
        position += term.n_params
    return {
        "n_true_terms": n_true,
        "n_true_recovered": recovered,
        "n_candidates_non_true": n_false,
        "n_excluded_correctly": excluded,
        "max_true_term_error": worst,
    }


def friction_ratios(model: PseudoHamiltonianModel, system: OdeSystem) -> Optional[List[float]]:
    """Learned over true damping on every support index with nonzero truth"""
    if system.damping_truth is None or not model.damping_support:
        return None
    damping = model.params[model.damping_slice]
    ratios = [
        float(damping[j] / system.damping_truth[index])
        for j, index in enumerate(model.damping_support)
        if system.damping_truth[index] != 0.0
    ]
    return ratios or None


# Running -------------------------------------------------------------------------


def _trajectory_record(model, system: OdeSystem, config: ExperimentConfig) -> Optional[Dict[str, Any]]:
    ev = config.evaluation
    if ev.example_init is None:
        return None
    times, truth, approx = simulate_pair(model, system, ev.example_init, ev.t_end, config.eval_dt, ev.substeps)
    return {
        "initial_state": list(ev.example_init),
        "variables": list(system.variable_names),
        "times": [float(t) for t in times],
        "truth": [[finite_or_none(v) for v in row] for row in truth],
        "model": [[finite_or_none(v) for v in row] for row in approx],
    }


def _training_summary(history: Optional[TrainHistory]) -> Optional[Dict[str, Any]]:
    if history is None or not history.losses:
        return None
    return {
        "epochs": len(history.losses),
        "final_loss": finite_or_none(history.losses[-1]),
        "final_data_loss": finite_or_none(history.data_losses[-1]),
        "active_terms": history.active_terms[-1],
        "n_pruned": len(history.pruning_events),
    }


def evaluate_model(model, system: OdeSystem, config: ExperimentConfig, kind: str, history=None) -> ExperimentReport:
    """Evaluate a fitted model according to the config's evaluation spec"""
    ev = config.evaluation
    dt_out = config.eval_dt
    summary = trajectory_errors(
        model, system, ev.n_inits, ev.t_end, dt_out, ev.seed,
        init_low=ev.init_low, init_high=ev.init_high, substeps=ev.substeps,
    )
    errors = summary.to_dict()
    errors = {
        **{k: finite_or_none(errors[k]) for k in ("mean", "median", "p25", "p75")},
        "n_blowups": errors["n_blowups"],
        "per_trajectory": [finite_or_none(e) for e in errors["per_trajectory"]],
    }

    extrapolation = None
    if ev.extrapolation_init is not None:
        extra = trajectory_errors(
            model, system, t_end=ev.extrapolation_t_end, dt_out=dt_out, inits=[ev.extrapolation_init],
            substeps=ev.substeps,
        )
        extrapolation = finite_or_none(extra.mean)

    tracking = exclusion = ratios = None
    if isinstance(model, PseudoHamiltonianModel):
        coefficients = phsi_coefficients(model, system)
        equations = str(extract_equations(model))
        exclusion = exclusion_stats(model, system)
        ratios = friction_ratios(model, system)
        if ev.force_tracking_init is not None and model.force_kind != "none" and system.force_truth is not None:
            tracking = finite_or_none(
                force_tracking_error(model, system, ev.force_tracking_init, ev.t_end, dt_out, ev.substeps)
            )
    else:
        coefficients = baseline_coefficients(model, system)
        equations = str(baseline_equations(model))

    return ExperimentReport(
        name=config.name,
        model_kind=kind,
        config=config.model_dump(mode="json"),
        coefficients=coefficients,
        errors=errors,
        equations=equations,
        extrapolation_error=extrapolation,
        force_tracking_error=tracking,
        exclusion=exclusion,
        friction_ratios=ratios,
        training=_training_summary(history),
        trajectory=_trajectory_record(model, system, config),
        model=model,
        history=history,
    )


def run_experiment(config: ExperimentConfig, dataset: Optional[Dataset] = None) -> ExperimentReport:
    """
    Generate data, fit, evaluate

    Args:
        config: Experiment config (the budget switch is resolved here)
        dataset: Use this dataset instead of generating one

    Returns:
        ExperimentReport echoing the config as given
    """
    started = time.perf_counter()
    resolved = apply_budget(config)
    system = make_benchmark(resolved.system.name, resolved.system.params)
    logger.info(f"Running experiment '{config.name}': model={config.model}, budget={config.budget}")
    if dataset is None:
        d = resolved.data
        dataset = generate_dataset(
            system, d.n_traj, d.t_end, d.dt, d.init_low, d.init_high, d.sigma, d.seed, d.substeps
        )
    model, history = fit_model(resolved, system, dataset)
    report = evaluate_model(model, system, resolved, config.model, history)
    report.config = config.model_dump(mode="json")
    report.wall_clock = time.perf_counter() - started
    logger.info(
        f"Experiment '{config.name}' finished in {report.wall_clock:.1f}s: mean trajectory error "
        f"{report.mean_error:.4g} ({report.errors['n_blowups']} blow-ups)"
    )
    return report
