"""
Parameter Sweeps
Integrator comparisons and regularization/pruning grids over independent cells
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from loguru import logger

from phsysid.core.errors import ConfigError
from phsysid.dynamics import make_benchmark
from phsysid.integrators import get_scheme

from .config import ExperimentConfig, parse_config
from .evaluation import evaluation_inits
from .runner import finite_or_none, run_experiment

CELL_COLUMNS = [
    "integrator", "budget", "sigma", "repeat", "seed", "status",
    "error_mean", "n_blowups", "friction_ratio_mean", "friction_ratio_std",
]
SUMMARY_COLUMNS = [
    "integrator", "budget", "sigma", "n_runs", "error_mean",
    "n_blowups", "friction_ratio_mean", "friction_ratio_std",
]


@dataclass
class SweepReport:
    """
    Sweep results

    Integrator sweeps fill cells (one per run) and rows (aggregated over repeats); grid sweeps
    fill grid with one matrix per metric.
    """

    kind: str
    config: Dict[str, Any]
    cells: List[Dict[str, Any]] = field(default_factory=list)
    rows: List[Dict[str, Any]] = field(default_factory=list)
    grid: Optional[Dict[str, Any]] = None
    wall_clock: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "config": self.config, "cells": self.cells, "rows": self.rows, "grid": self.grid}


def repeat_seed(seed: int, repeat: int) -> int:
    """Seed of a repeat; repeat 0 reuses the master seed"""
    if repeat == 0:
        return seed
    return int(np.random.SeedSequence([seed, repeat]).generate_state(1)[0])


def _with(config: ExperimentConfig, **sections) -> ExperimentConfig:
    doc = config.model_dump()
    for section, values in sections.items():
        if isinstance(values, dict):
            doc[section].update(values)
        else:
            doc[section] = values
    return parse_config(doc)


def _budget_label(budget: Dict[str, Any]) -> str:
    if not budget:
        return "config"
    return ",".join(f"{k}={budget[k]}" for k in sorted(budget))


def integrator_sweep(
    config: ExperimentConfig,
    integrators: Sequence[str],
    budgets: Optional[Sequence[Dict[str, Any]]] = None,
    noise_levels: Optional[Sequence[float]] = None,
    seed: Optional[int] = None,
    repeats: int = 1,
) -> SweepReport:
    """
    Train one model per (integrator, budget, noise, repeat) cell

    Cells sharing budget, noise and repeat share their data, so integrators are compared on the
    same samples. Integrators that cannot be used on the system are recorded as skipped.

    Args:
        config: Base experiment
        integrators: Scheme names
        budgets: DataSpec overrides, e.g. {"n_traj": 150}; None runs the config's own data
        noise_levels: Noise standard deviations; None uses the config's
        seed: Master seed (defaults to the config's data seed)
        repeats: Runs per cell with derived seeds

    Returns:
        SweepReport with per-run cells and per-cell rows
    """
    if repeats < 1:
        raise ConfigError(f"repeats must be >= 1, got {repeats}")
    budgets = list(budgets) if budgets is not None else [{}]
    noise_levels = list(noise_levels) if noise_levels is not None else [config.data.sigma]
    master = config.data.seed if seed is None else seed
    system = make_benchmark(config.system.name, config.system.params)
    logger.info(
        f"Integrator sweep on {system.name}: {len(integrators)} integrators x {len(budgets)} budgets x "
        f"{len(noise_levels)} noise levels x {repeats} repeats"
    )

    report = SweepReport(kind="integrators", config=config.model_dump(mode="json"))
    for name in integrators:
        scheme = get_scheme(name)
        reason = None
        if not scheme.available:
            reason = "no tableau"
        elif scheme.requires_separable and system.separable_split is None:
            reason = "system not separable"
        for budget in budgets:
            for sigma in noise_levels:
                ratios: List[float] = []
                errors: List[float] = []
                blowups = 0
                for r in range(repeats):
                    cell_seed = repeat_seed(master, r)
                    cell = {
                        "integrator": scheme.name, "budget": _budget_label(budget), "sigma": float(sigma),
                        "repeat": r, "seed": cell_seed, "status": "ok", "error_mean": None, "n_blowups": None,
                        "friction_ratio_mean": None, "friction_ratio_std": None,
                    }
                    if reason is not None:
                        cell["status"] = f"skipped: {reason}"
                        report.cells.append(cell)
                        continue
                    cfg = _with(
                        config,
                        data={**budget, "sigma": float(sigma), "seed": cell_seed},
                        hyper={"integrator": scheme.name, "seed": cell_seed},
                    )
                    result = run_experiment(cfg)
                    cell["error_mean"] = result.errors["mean"]
                    cell["n_blowups"] = result.errors["n_blowups"]
                    errors.append(result.mean_error)
                    blowups += result.errors["n_blowups"]
                    if result.friction_ratios:
                        cell["friction_ratio_mean"] = float(np.mean(result.friction_ratios))
                        cell["friction_ratio_std"] = float(np.std(result.friction_ratios))
                        ratios.extend(result.friction_ratios)
                    report.cells.append(cell)
                if reason is not None:
                    logger.warning(f"Skipping integrator {scheme.name}: {reason}")
                    continue
                report.rows.append({
                    "integrator": scheme.name,
                    "budget": _budget_label(budget),
                    "sigma": float(sigma),
                    "n_runs": repeats,
                    "error_mean": finite_or_none(np.mean(errors)),
                    "n_blowups": blowups,
                    "friction_ratio_mean": float(np.mean(ratios)) if ratios else None,
                    "friction_ratio_std": float(np.std(ratios)) if ratios else None,
                })
    return report


def _grid_report(kind: str, config: ExperimentConfig, row_name: str, rows, col_name: str, cols, metrics) -> SweepReport:
    grid = {"row_name": row_name, "rows": list(rows), "col_name": col_name, "cols": list(cols)}
    grid.update(metrics)
    return SweepReport(kind=kind, config=config.model_dump(mode="json"), grid=grid)


def reg_prune_sweep(
    config: ExperimentConfig,
    lam_grid: Sequence[float],
    prune_grid: Sequence[int],
    epochs: Optional[int] = None,
    seed: Optional[int] = None,
) -> SweepReport:
    """
    Mean trajectory error and learned term count per (lam_h, prune interval) cell

    Args:
        config: Base experiment (PHSI)
        lam_grid: Values of the H penalty weight (matrix rows)
        prune_grid: Pruning intervals (matrix columns)
        epochs: Override of the training length
        seed: Seed applied to data and training of every cell

    Returns:
        SweepReport whose grid holds 'error' and 'active_terms' matrices
    """
    if not lam_grid or not prune_grid:
        raise ConfigError("regularization and pruning grids must be nonempty")
    hyper: Dict[str, Any] = {}
    data: Dict[str, Any] = {}
    if epochs is not None:
        hyper["epochs"] = epochs
    if seed is not None:
        hyper["seed"] = data["seed"] = seed
    logger.info(f"Regularization/pruning sweep: {len(lam_grid)} x {len(prune_grid)} cells")

    error = np.full((len(lam_grid), len(prune_grid)), np.nan)
    terms = np.zeros((len(lam_grid), len(prune_grid)), dtype=int)
    for i, lam in enumerate(lam_grid):
        for j, interval in enumerate(prune_grid):
            cfg = _with(config, data=data, hyper={**hyper, "lam_h": float(lam), "prune_interval": int(interval)})
            result = run_experiment(cfg)
            error[i, j] = result.mean_error
            terms[i, j] = result.training["active_terms"] if result.training else 0
    return _grid_report(
        "reg_prune", config, "lam_h", lam_grid, "prune_interval", prune_grid,
        {
            "error": [[finite_or_none(v) for v in row] for row in error],
            "active_terms": terms.tolist(),
        },
    )


def reg_separation_sweep(
    config: ExperimentConfig,
    lam_h_grid: Sequence[float],
    lam_f_grid: Sequence[float],
    seed: Optional[int] = None,
) -> SweepReport:
    """
    How the H and force penalties split the dynamics between the learned H and the learned force

    Each cell records the trajectory error, the mean absolute learned force over random states
    in the evaluation box, and the largest H coefficient error.
    """
    if not lam_h_grid or not lam_f_grid:
        raise ConfigError("penalty grids must be nonempty")
    if config.model not in ("phsi", "phsi_hybrid"):
        raise ConfigError(f"the H/force separation grid needs a pseudo-Hamiltonian model, got '{config.model}'")
    system = make_benchmark(config.system.name, config.system.params)
    ev = config.evaluation
    samples = evaluation_inits(system.dimension, 256, ev.seed, ev.init_low, ev.init_high)
    sections: Dict[str, Any] = {}
    if seed is not None:
        sections = {"data": {"seed": seed}, "hyper": {"seed": seed}}
    logger.info(f"Regularization separation sweep: {len(lam_h_grid)} x {len(lam_f_grid)} cells")

    shape = (len(lam_h_grid), len(lam_f_grid))
    error, force, h_error = np.full(shape, np.nan), np.zeros(shape), np.zeros(shape)
    for i, lam_h in enumerate(lam_h_grid):
        for j, lam_f in enumerate(lam_f_grid):
            hyper = {**sections.get("hyper", {}), "lam_h": float(lam_h), "lam_f": float(lam_f)}
            cfg = _with(config, data=sections.get("data", {}), hyper=hyper)
            result = run_experiment(cfg)
            model = result.model
            error[i, j] = result.mean_error
            outputs = model.force(samples, 0.0)
            force[i, j] = 0.0 if outputs is None else float(np.mean(np.abs(outputs)))
            h_rows = [row for row in result.coefficients if row.term.startswith("H:") and row.truth is not None]
            h_error[i, j] = max((row.abs_error for row in h_rows), default=0.0)
    return _grid_report(
        "reg_separation", config, "lam_h", lam_h_grid, "lam_f", lam_f_grid,
        {
            "error": [[finite_or_none(v) for v in row] for row in error],
            "force_magnitude": force.tolist(),
            "hamiltonian_error": h_error.tolist(),
        },
    )
