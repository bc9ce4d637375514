"""
Dynamics Data Types
States, trajectories, datasets and the ODE system description
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from phsysid.core.errors import DimensionError

StateVector = np.ndarray

SPACING_TOL = 1e-12


def to_state_vector(values, d: Optional[int] = None) -> StateVector:
    """
    Validate and convert a state

    Args:
        values: Sequence of coordinates
        d: Expected dimension (unchecked when None)

    Returns:
        Float array of length d
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1:
        raise DimensionError(f"state must be one-dimensional, got shape {x.shape}")
    if d is not None and x.shape[0] != d:
        raise DimensionError(f"state has length {x.shape[0]}, system dimension is {d}")
    if not np.all(np.isfinite(x)):
        raise DimensionError("state contains non-finite entries")
    return x


@dataclass
class OdeSystem:
    """
    ODE x' = g(x, t), optionally with its pseudo-Hamiltonian decomposition

    When every decomposition component is present, rhs(x, t) equals
    (S - diag(r)) grad H(x) + F(x, t).
    """

    name: str
    dimension: int
    rhs: Callable[[np.ndarray, Any], np.ndarray]
    hamiltonian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    grad_hamiltonian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    structure: Optional[np.ndarray] = None
    damping_truth: Optional[np.ndarray] = None
    force_truth: Optional[Callable[[np.ndarray, Any], np.ndarray]] = None
    separable_split: Optional[int] = None
    variable_names: Tuple[str, ...] = ()
    hamiltonian_terms: Dict[Tuple[int, ...], float] = field(default_factory=dict)
    force_params: Dict[str, float] = field(default_factory=dict)
    force_components: Tuple[int, ...] = ()
    damping_support: Tuple[int, ...] = ()
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.variable_names:
            self.variable_names = tuple(f"x{i + 1}" for i in range(self.dimension))
        if self.structure is not None:
            self.structure = np.asarray(self.structure, dtype=float)
            if self.structure.shape != (self.dimension, self.dimension):
                raise DimensionError(f"structure matrix shape {self.structure.shape} for dimension {self.dimension}")
            if not np.allclose(self.structure, -self.structure.T, atol=0.0):
                raise DimensionError("structure matrix must be antisymmetric")
        if self.damping_truth is not None:
            self.damping_truth = np.asarray(self.damping_truth, dtype=float)

    @property
    def has_decomposition(self) -> bool:
        return self.grad_hamiltonian is not None and self.structure is not None

    def decomposed_rhs(self, x, t=0.0) -> np.ndarray:
        """(S - diag(r)) grad H(x) + F(x, t) from the ground-truth components"""
        x = np.asarray(x, dtype=float)
        grad = self.grad_hamiltonian(x)
        out = grad @ self.structure.T
        if self.damping_truth is not None:
            out = out - grad * self.damping_truth
        if self.force_truth is not None:
            out = out + self.force_truth(x, t)
        return out


@dataclass
class Trajectory:
    """Uniformly sampled states of one simulation"""

    times: np.ndarray
    states: np.ndarray
    dt: float

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim != 2 or self.states.shape[0] != self.times.shape[0]:
            raise DimensionError(f"{self.times.shape[0]} times but states of shape {self.states.shape}")
        if self.times.shape[0] > 1:
            steps = np.diff(self.times)
            if np.any(steps <= 0) or np.max(np.abs(steps - self.dt)) > SPACING_TOL * max(1.0, abs(self.times[-1])):
                raise DimensionError("trajectory times must be strictly increasing with uniform spacing dt")

    def __len__(self) -> int:
        return self.times.shape[0]

    @property
    def dimension(self) -> int:
        return self.states.shape[1]


@dataclass
class Dataset:
    """Trajectories sharing one dt, with noise metadata and seed provenance"""

    trajectories: List[Trajectory]
    noise_sigma: float
    seed: int
    clean_copy: Optional["Dataset"] = None
    system_name: str = ""
    system_params: Dict[str, Any] = field(default_factory=dict)
    init_low: float = -1.0
    init_high: float = 1.0

    def __post_init__(self):
        if self.trajectories:
            dts = {round(traj.dt, 15) for traj in self.trajectories}
            if len(dts) != 1:
                raise DimensionError(f"trajectories must share one dt, got {sorted(dts)}")

    @property
    def dt(self) -> float:
        return self.trajectories[0].dt

    @property
    def dimension(self) -> int:
        return self.trajectories[0].dimension

    @property
    def n_samples(self) -> int:
        return sum(max(len(traj) - 1, 0) for traj in self.trajectories)

    def pairs(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Consecutive sample pairs of every trajectory

        Returns:
            (x_n, x_np1, t_n) with shapes (m, d), (m, d), (m,)
        """
        x_n = [traj.states[:-1] for traj in self.trajectories]
        x_np1 = [traj.states[1:] for traj in self.trajectories]
        t_n = [traj.times[:-1] for traj in self.trajectories]
        return np.concatenate(x_n), np.concatenate(x_np1), np.concatenate(t_n)
