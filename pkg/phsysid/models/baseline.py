"""
Baseline Models
Sparse regression of g directly (trained on the integrator loss, or fitted by thresholded least squares)
"""

from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
from loguru import logger

from phsysid.autodiff import ops
from phsysid.basis import BasisLibrary, build_library
from phsysid.core.errors import ConfigError, DimensionError
from phsysid.dynamics.types import Dataset, OdeSystem

from .phsi import INIT_COEFFICIENT, INIT_TRIG, EquationEntry, EquationReport, library_entries

RIDGE = 1e-10


@dataclass
class BaselineModel:
    """
    g(x, t) as a linear combination of library terms, one coefficient column per component

    Monomial coefficients come first as an (n_monomials, d) row-major matrix, followed by an
    (amplitude, frequency) pair per trig term per component. With time augmentation the
    library variables are (x, t) and the state carries time as its last coordinate with t' = 1.
    """

    library: BasisLibrary
    dimension: int
    time_augmented: bool = False
    params: Optional[np.ndarray] = None
    active: Optional[np.ndarray] = None
    variable_names: Tuple[str, ...] = ()
    separable_split: Optional[int] = None

    def __post_init__(self):
        expected = self.dimension + (1 if self.time_augmented else 0)
        if self.library.dimension != expected:
            raise DimensionError(f"library over {self.library.dimension} variables, model needs {expected}")
        if not self.variable_names:
            self.variable_names = tuple(self.library.variable_names[: self.dimension])
        if self.params is None:
            self.params = np.zeros(self.n_params)
        self.params = np.array(self.params, dtype=float)
        if self.params.shape != (self.n_params,):
            raise DimensionError(f"model has {self.n_params} parameters, got {self.params.shape}")
        if self.active is None:
            self.active = np.ones(self.n_params, dtype=bool)
        self.active = np.array(self.active, dtype=bool)
        self.params[~self.active] = 0.0

    @property
    def n_monomial_params(self) -> int:
        return self.library.n_monomials * self.dimension

    @property
    def n_trig_params(self) -> int:
        return 2 * len(self.library.trig_terms)

    @property
    def n_params(self) -> int:
        return self.n_monomial_params + self.dimension * self.n_trig_params

    def trig_block(self, i: int) -> slice:
        start = self.n_monomial_params + i * self.n_trig_params
        return slice(start, start + self.n_trig_params)

    @property
    def coefficient_matrix(self) -> np.ndarray:
        """Monomial coefficients as components x library terms"""
        return self.params[: self.n_monomial_params].reshape(self.library.n_monomials, self.dimension).T

    def component_params(self, i: int) -> np.ndarray:
        """Library-layout parameter vector of component i"""
        mono = self.coefficient_matrix[i]
        return np.concatenate([mono, self.params[self.trig_block(i)]])

    def component_active(self, i: int) -> np.ndarray:
        mono = self.active[: self.n_monomial_params].reshape(self.library.n_monomials, self.dimension)[:, i]
        return np.concatenate([mono, self.active[self.trig_block(i)]])

    def coefficient_slots(self) -> Dict[str, np.ndarray]:
        """All coefficient and amplitude slots are penalized as one group"""
        slots = list(range(self.n_monomial_params))
        for i in range(self.dimension):
            start = self.trig_block(i).start
            slots += [start + 2 * j for j in range(len(self.library.trig_terms))]
        return {"g": np.array(slots, dtype=int)}

    def frequency_partners(self) -> Dict[int, int]:
        partners = {}
        for i in range(self.dimension):
            start = self.trig_block(i).start
            for j in range(len(self.library.trig_terms)):
                partners[start + 2 * j] = start + 2 * j + 1
        return partners

    def prunable_slots(self, prune_damping: bool = False) -> np.ndarray:
        return np.sort(self.coefficient_slots()["g"])

    def rhs(self, x, t=0.0, theta=None):
        """
        Right-hand side on the model state

        Args:
            x: States (..., d), or (..., d + 1) ending in time when time-augmented
            t: Time (ignored for the library when time-augmented)
            theta: Parameter vector override

        Returns:
            Derivatives with the shape of x (time-augmented: last entry 1)
        """
        theta = self.params if theta is None else theta
        x = ops.asarray(x)
        width = self.dimension + (1 if self.time_augmented else 0)
        if x.shape[-1] != width:
            raise DimensionError(f"baseline model expects states of width {width}, got {x.shape}")
        lib = self.library
        out = None
        if lib.n_monomials:
            C = ops.reshape(theta[: self.n_monomial_params], (lib.n_monomials, self.dimension))
            out = ops.matmul(ops.monomials(x, lib.exponents), C)
        if lib.trig_terms:
            time = x[..., -1] if self.time_augmented else t
            columns = []
            for i in range(self.dimension):
                block = self.trig_block(i)
                value = None
                for j, term in enumerate(lib.trig_terms):
                    amplitude = theta[block.start + 2 * j]
                    frequency = theta[block.start + 2 * j + 1]
                    wave = ops.sin(frequency * time) if term.trig_shape == "sin" else ops.cos(frequency * time)
                    value = amplitude * wave if value is None else value + amplitude * wave
                columns.append(value + np.zeros(x.shape[:-1]))
            trig = ops.stack(columns, axis=-1)
            out = trig if out is None else out + trig
        if out is None:
            out = np.zeros(x.shape[:-1] + (self.dimension,))
        if self.time_augmented:
            embed = np.hstack([np.eye(self.dimension), np.zeros((self.dimension, 1))])
            clock = np.zeros(x.shape[:-1] + (self.dimension + 1,))
            clock[..., -1] = 1.0
            out = ops.matmul(out, embed) + clock
        return out

    def to_model_state(self, x, t):
        """Append time as the last coordinate when time-augmented"""
        if not self.time_augmented:
            return np.asarray(x, dtype=float)
        x = np.asarray(x, dtype=float)
        time = np.zeros(x.shape[:-1] + (1,)) + np.asarray(t, dtype=float)[..., None]
        return np.concatenate([x, time], axis=-1)

    def state_rhs(self, x, t=0.0):
        """Right-hand side on the physical state only (time supplied separately)"""
        if not self.time_augmented:
            return self.rhs(np.asarray(x, dtype=float), t)
        return self.rhs(self.to_model_state(x, t), t)[..., : self.dimension]

    def copy(self) -> "BaselineModel":
        return replace(self, params=self.params.copy(), active=self.active.copy())


def baseline_rhs(model: BaselineModel, x, t=0.0):
    """Right-hand side of a baseline model at its current parameters"""
    return model.rhs(x, t)


def build_baseline_model(
    system: OdeSystem,
    degree: int,
    include_constant: bool = True,
    trig_sin: bool = False,
    trig_cos: bool = False,
    time_augmented: bool = False,
) -> BaselineModel:
    """
    Baseline over the system's state (plus time when augmented)

    Monomials start at 0.2, trig amplitudes and frequencies at 1.0.
    """
    names = tuple(system.variable_names) + (("t",) if time_augmented else ())
    d_lib = system.dimension + (1 if time_augmented else 0)
    library = build_library(d_lib, degree, include_constant, trig_sin, trig_cos, variable_names=names)
    model = BaselineModel(
        library=library,
        dimension=system.dimension,
        time_augmented=time_augmented,
        variable_names=tuple(system.variable_names),
        separable_split=system.separable_split,
    )
    params = np.full(model.n_params, INIT_TRIG)
    params[: model.n_monomial_params] = INIT_COEFFICIENT
    model.params = params
    return model


def augment_with_time(states: np.ndarray, times: np.ndarray) -> np.ndarray:
    return np.concatenate([states, np.asarray(times, dtype=float)[:, None]], axis=-1)


def _least_squares(theta: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Least squares with a ridge fallback for rank-deficient regressors"""
    if theta.shape[1] == 0:
        return np.zeros((0,) + target.shape[1:])
    if np.linalg.matrix_rank(theta) < theta.shape[1]:
        logger.warning(f"Rank-deficient regression ({theta.shape[1]} columns); adding ridge {RIDGE:g}")
        gram = theta.T @ theta + RIDGE * np.eye(theta.shape[1])
        return np.linalg.solve(gram, theta.T @ target)
    return np.linalg.lstsq(theta, target, rcond=None)[0]


def sindy_fit(
    dataset: Dataset,
    library: BasisLibrary,
    threshold: float = 0.05,
    sweeps: int = 10,
    time_augmented: bool = False,
) -> BaselineModel:
    """
    Sequentially thresholded least squares on finite-difference derivatives

    Args:
        dataset: Trajectories with at least two points each
        library: Monomial library over the state (plus time when augmented)
        threshold: Coefficients below this magnitude are zeroed each sweep
        sweeps: Number of threshold/refit rounds
        time_augmented: Treat time as an extra library variable

    Returns:
        BaselineModel with zeroed coefficients marked inactive
    """
    if library.trig_terms:
        raise ConfigError("thresholded least squares needs a library that is linear in its parameters")
    if any(len(traj) < 2 for traj in dataset.trajectories):
        raise ConfigError("every trajectory needs at least two points for derivative estimates")
    if threshold < 0 or sweeps < 0:
        raise ConfigError(f"threshold and sweeps must be nonnegative, got {threshold}, {sweeps}")
    d = dataset.dimension
    features, targets = [], []
    for traj in dataset.trajectories:
        derivative = np.gradient(traj.states, traj.dt, axis=0, edge_order=1)
        z = augment_with_time(traj.states, traj.times) if time_augmented else traj.states
        features.append(z)
        targets.append(derivative)
    Z, dX = np.vstack(features), np.vstack(targets)
    if Z.shape[1] != library.dimension:
        raise DimensionError(f"library over {library.dimension} variables, data has {Z.shape[1]}")
    theta = ops.monomials(Z, library.exponents)

    Xi = _least_squares(theta, dX)
    for _ in range(sweeps):
        small = np.abs(Xi) < threshold
        Xi[small] = 0.0
        for i in range(d):
            big = ~small[:, i]
            if big.any():
                Xi[big, i] = _least_squares(theta[:, big], dX[:, i])
    Xi[np.abs(Xi) < threshold] = 0.0

    model = BaselineModel(
        library=library,
        dimension=d,
        time_augmented=time_augmented,
        params=Xi.reshape(-1),
        active=(Xi != 0.0).reshape(-1),
    )
    logger.info(f"Fitted sparse regression model: {int(np.count_nonzero(Xi))} of {Xi.size} terms active")
    return model


def baseline_equations(model: BaselineModel) -> EquationReport:
    """Nonzero terms of every component of g"""
    entries: List[EquationEntry] = []
    for i in range(model.dimension):
        entries += library_entries(
            "g", model.variable_names[i], model.library, model.component_params(i), model.component_active(i)
        )
    return EquationReport(entries=entries)


def baseline_truth(model: BaselineModel, system: OdeSystem) -> Optional[np.ndarray]:
    """
    Ground-truth parameters of g in the model's layout

    Monomial coefficients come from expanding (S - diag(r)) grad H; a sine drive on a forced
    component fills that component's first sine slot. Returns None when the system has no
    polynomial decomposition or a true term is missing from the library.
    """
    from phsysid.dynamics.systems import rhs_polynomial_terms

    try:
        expansion = rhs_polynomial_terms(system)
    except ConfigError:
        return None
    truth = np.zeros(model.n_params)
    for i, terms in expansion.items():
        for exponents, value in terms.items():
            key = tuple(exponents) + ((0,) if model.time_augmented else ())
            try:
                row = model.library.index_of(key)
            except KeyError:
                return None
            truth[row * model.dimension + i] = value
    if system.force_params:
        sine = [j for j, term in enumerate(model.library.trig_terms) if term.trig_shape == "sin"]
        if not sine:
            return None
        for i in system.force_components:
            start = model.trig_block(i).start + 2 * sine[0]
            truth[start] = system.force_params["alpha"]
            truth[start + 1] = system.force_params["omega"]
    elif system.force_truth is not None:
        return None
    return truth
