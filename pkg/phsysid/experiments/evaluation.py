"""
Model Evaluation
Trajectory L2 errors against the reference simulator, extrapolation and force tracking
"""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from loguru import logger

from phsysid.core.errors import ConfigError, DimensionError
from phsysid.dynamics.types import OdeSystem
from phsysid.integrators import simulate_batch


def as_rhs(model) -> Callable:
    """Vectorized g(x, t) of an OdeSystem, a trained model or a plain callable"""
    if isinstance(model, OdeSystem):
        return model.rhs
    if hasattr(model, "state_rhs"):
        return model.state_rhs
    if callable(model):
        return model
    raise ConfigError(f"cannot simulate an object of type {type(model).__name__}")


@dataclass
class ErrorSummary:
    """Per-trajectory L2 errors; blown-up model simulations are inf"""

    errors: np.ndarray
    n_blowups: int

    @property
    def mean(self) -> float:
        return float(np.mean(self.errors))

    def percentile(self, q: float) -> float:
        finite = self.errors[np.isfinite(self.errors)]
        return float(np.percentile(finite, q)) if finite.size else float("inf")

    @property
    def median(self) -> float:
        return self.percentile(50)

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "median": self.median,
            "p25": self.percentile(25),
            "p75": self.percentile(75),
            "n_blowups": self.n_blowups,
            "per_trajectory": [float(e) for e in self.errors],
        }


def evaluation_inits(d: int, n_inits: int, seed: int, low: float = -1.0, high: float = 1.0) -> np.ndarray:
    if n_inits < 1:
        raise ConfigError(f"n_inits must be >= 1, got {n_inits}")
    return np.random.default_rng(seed).uniform(low, high, size=(n_inits, d))


def l2_errors(truth: np.ndarray, approx: np.ndarray, dt_out: float) -> np.ndarray:
    """sqrt(sum_n |approx(t_n) - truth(t_n)|^2 * dt_out) per trajectory, states shaped (n, m, d)"""
    diff = approx - truth
    return np.sqrt(np.sum(diff * diff, axis=(0, 2)) * dt_out)


def trajectory_errors(
    model,
    system: OdeSystem,
    n_inits: int = 10,
    t_end: float = 10.0,
    dt_out: float = 0.1,
    seed: int = 0,
    inits: Optional[Sequence[Sequence[float]]] = None,
    init_low: float = -1.0,
    init_high: float = 1.0,
    substeps: int = 10,
) -> ErrorSummary:
    """
    L2 error of a model's trajectories against the true system

    Args:
        model: Trained model, OdeSystem or callable g(x, t)
        system: True system
        n_inits: Number of random initial states (ignored when inits is given)
        t_end: Horizon
        dt_out: Output spacing of the error grid
        seed: Seed of the uniform initial-state draw
        inits: Explicit initial states (m, d)
        init_low: Lower bound of the draw
        init_high: Upper bound of the draw
        substeps: RK4 steps per output interval for both simulations

    Returns:
        ErrorSummary
    """
    if inits is None:
        x0s = evaluation_inits(system.dimension, n_inits, seed, init_low, init_high)
    else:
        x0s = np.atleast_2d(np.asarray(inits, dtype=float))
        if x0s.shape[1] != system.dimension:
            raise DimensionError(f"initial states of width {x0s.shape[1]} for a {system.dimension}-dimensional system")

    _, truth, _ = simulate_batch(system.rhs, x0s, t_end, dt_out, substeps=substeps, on_blowup="raise")
    _, approx, blown = simulate_batch(as_rhs(model), x0s, t_end, dt_out, substeps=substeps, on_blowup="mask")
    errors = l2_errors(truth, approx, dt_out)
    errors[blown] = np.inf
    n_blowups = int(blown.sum())
    if n_blowups:
        logger.warning(f"{n_blowups} of {len(x0s)} model trajectories blew up before t={t_end}")
    return ErrorSummary(errors=errors, n_blowups=n_blowups)


def trajectory_error(model, system: OdeSystem, n_inits: int = 10, t_end: float = 10.0, dt_out: float = 0.1, seed: int = 0, **kwargs) -> float:
    """Mean trajectory L2 error over random initial states (inf if any simulation blew up)"""
    return trajectory_errors(model, system, n_inits, t_end, dt_out, seed, **kwargs).mean


def force_tracking_error(model, system: OdeSystem, x0, t_end: float, dt_out: float, substeps: int = 10) -> float:
    """
    Mean absolute difference between the learned and the true force along a true trajectory

    Only the model's forced components are compared.
    """
    if system.force_truth is None:
        raise ConfigError(f"{system.name} has no known force")
    if getattr(model, "force_kind", "none") == "none":
        raise ConfigError("model has no force to compare")
    x0s = np.atleast_2d(np.asarray(x0, dtype=float))
    times, states, _ = simulate_batch(system.rhs, x0s, t_end, dt_out, substeps=substeps)
    x = states[:, 0, :]
    learned = np.asarray(model.force(x, times))
    truth = np.asarray(system.force_truth(x, times))
    columns = list(model.force_components) if model.force_kind == "symbolic" else list(model.mlp.components)
    return float(np.mean(np.abs(learned[:, columns] - truth[:, columns])))


def simulate_pair(model, system: OdeSystem, x0, t_end: float, dt_out: float, substeps: int = 10):
    """
    True and model trajectories from one initial state

    Returns:
        (times (n,), truth (n, d), model (n, d) with NaN after a blow-up)
    """
    x0s = np.atleast_2d(np.asarray(x0, dtype=float))
    times, truth, _ = simulate_batch(system.rhs, x0s, t_end, dt_out, substeps=substeps)
    _, approx, _ = simulate_batch(as_rhs(model), x0s, t_end, dt_out, substeps=substeps, on_blowup="mask")
    return times, truth[:, 0, :], approx[:, 0, :]
