"""
Pseudo-Hamiltonian Model
Trainable (S - diag(r)) grad H(x) + F(x, t) with sparse H and optional force model
"""

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from phsysid.autodiff import ops
from phsysid.basis import (
    MONOMIAL,
    TRIG,
    BasisLibrary,
    build_library,
    build_polynomial_library,
    eval_library,
    eval_library_gradient,
    term_label,
    term_to_string,
)
from phsysid.core.errors import ConfigError, DimensionError
from phsysid.dynamics.types import OdeSystem

from .mlp import DEFAULT_HIDDEN, MlpForce, build_mlp_force, mlp_forward, network_input

FORCE_KINDS = ("none", "symbolic", "mlp")

INIT_COEFFICIENT = 0.2
INIT_TRIG = 1.0
INIT_DAMPING = 0.2


def _embedding(indices: Sequence[int], d: int) -> np.ndarray:
    """Rows select the state components a reduced vector is written into"""
    E = np.zeros((len(indices), d))
    for row, index in enumerate(indices):
        E[row, index] = 1.0
    return E


def _library_coefficient_slots(lib: BasisLibrary) -> Tuple[List[int], List[int]]:
    """(coefficient and amplitude slots, frequency slots) relative to the library block"""
    coefficients = list(range(lib.n_monomials))
    frequencies = lib.frequency_slots()
    coefficients += [slot - 1 for slot in frequencies]
    return coefficients, frequencies


@dataclass
class PseudoHamiltonianModel:
    """
    Learned pseudo-Hamiltonian right-hand side

    The flat parameter vector is laid out as [H library | damping support | force].
    Symbolic forces hold one force-library block per forced component.
    `active` is False for pruned slots, which are kept at exactly zero.
    """

    structure: np.ndarray
    h_library: BasisLibrary
    damping_support: Tuple[int, ...] = ()
    force_kind: str = "none"
    force_library: Optional[BasisLibrary] = None
    force_components: Tuple[int, ...] = ()
    mlp: Optional[MlpForce] = None
    params: Optional[np.ndarray] = None
    active: Optional[np.ndarray] = None
    separable_split: Optional[int] = None
    variable_names: Tuple[str, ...] = ()
    _damping_embed: np.ndarray = field(init=False, repr=False, compare=False)
    _force_embed: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.structure = np.asarray(self.structure, dtype=float)
        d = self.structure.shape[0]
        if self.structure.shape != (d, d) or np.max(np.abs(self.structure + self.structure.T), initial=0.0) > 0.0:
            raise ConfigError("structure matrix must be square and antisymmetric")
        if self.h_library.dimension != d or self.h_library.components is not None:
            raise DimensionError(f"Hamiltonian library must span the full state of dimension {d}")
        if self.force_kind not in FORCE_KINDS:
            raise ConfigError(f"force kind must be one of {FORCE_KINDS}, got {self.force_kind!r}")
        if self.force_kind == "symbolic" and (self.force_library is None or not self.force_components):
            raise ConfigError("symbolic force needs a library and at least one forced component")
        if self.force_kind == "mlp":
            if self.mlp is None:
                raise ConfigError("mlp force needs a network")
            self.force_components = tuple(self.mlp.components)
        if self.force_kind == "none":
            self.force_components = ()
        for index in tuple(self.damping_support) + tuple(self.force_components):
            if not 0 <= index < d:
                raise DimensionError(f"component index {index} outside state of dimension {d}")
        self.damping_support = tuple(self.damping_support)
        self.force_components = tuple(self.force_components)
        if not self.variable_names:
            self.variable_names = tuple(self.h_library.variable_names)

        if self.params is None:
            self.params = np.zeros(self.n_params)
        self.params = np.array(self.params, dtype=float)
        if self.params.shape != (self.n_params,):
            raise DimensionError(f"model has {self.n_params} parameters, got {self.params.shape}")
        if self.active is None:
            self.active = np.ones(self.n_params, dtype=bool)
        self.active = np.array(self.active, dtype=bool)
        self.params[~self.active] = 0.0
        self._damping_embed = _embedding(self.damping_support, d)
        self._force_embed = _embedding(self.force_components, d)

    # Layout
    @property
    def dimension(self) -> int:
        return self.structure.shape[0]

    @property
    def n_force_params(self) -> int:
        if self.force_kind == "symbolic":
            return len(self.force_components) * self.force_library.n_params
        if self.force_kind == "mlp":
            return self.mlp.n_params
        return 0

    @property
    def n_params(self) -> int:
        return self.h_library.n_params + len(self.damping_support) + self.n_force_params

    @property
    def h_slice(self) -> slice:
        return slice(0, self.h_library.n_params)

    @property
    def damping_slice(self) -> slice:
        start = self.h_library.n_params
        return slice(start, start + len(self.damping_support))

    @property
    def force_slice(self) -> slice:
        return slice(self.damping_slice.stop, self.n_params)

    def force_block(self, k: int) -> slice:
        """Parameter block of the k-th forced component (symbolic force)"""
        size = self.force_library.n_params
        start = self.force_slice.start + k * size
        return slice(start, start + size)

    def coefficient_slots(self) -> Dict[str, np.ndarray]:
        """Penalized coefficient slots per part: H, F (symbolic only) and R"""
        h_coeffs, _ = _library_coefficient_slots(self.h_library)
        groups = {
            "H": np.array(h_coeffs, dtype=int),
            "R": np.arange(self.damping_slice.start, self.damping_slice.stop),
            "F": np.array([], dtype=int),
        }
        if self.force_kind == "symbolic":
            f_coeffs, _ = _library_coefficient_slots(self.force_library)
            groups["F"] = np.array(
                [self.force_block(k).start + s for k in range(len(self.force_components)) for s in f_coeffs], dtype=int
            )
        return groups

    def frequency_partners(self) -> Dict[int, int]:
        """Trig amplitude slot -> frequency slot, pruned together"""
        partners = {slot - 1: slot for slot in self.h_library.frequency_slots()}
        if self.force_kind == "symbolic":
            for k in range(len(self.force_components)):
                start = self.force_block(k).start
                partners.update({start + slot - 1: start + slot for slot in self.force_library.frequency_slots()})
        return partners

    def prunable_slots(self, prune_damping: bool = False) -> np.ndarray:
        groups = self.coefficient_slots()
        parts = [groups["H"], groups["F"]]
        if prune_damping:
            parts.append(groups["R"])
        return np.sort(np.concatenate(parts)).astype(int)

    # Evaluation
    def hamiltonian(self, x, theta=None):
        theta = self.params if theta is None else theta
        return eval_library(self.h_library, theta[self.h_slice], x)

    def grad_hamiltonian(self, x, theta=None):
        theta = self.params if theta is None else theta
        return eval_library_gradient(self.h_library, theta[self.h_slice], x)

    def damping(self, theta=None):
        """Full-length damping vector (zeros outside the support)"""
        theta = self.params if theta is None else theta
        if not self.damping_support:
            return np.zeros(self.dimension)
        return ops.matmul(theta[self.damping_slice], self._damping_embed)

    def force_outputs(self, x, t=0.0, theta=None):
        """Force values on the forced components only, shape (..., n_forced)"""
        theta = self.params if theta is None else theta
        x = ops.asarray(x)
        if self.force_kind == "symbolic":
            columns = [
                eval_library(self.force_library, theta[self.force_block(k)], x, t)
                for k in range(len(self.force_components))
            ]
            return ops.stack(columns, axis=-1)
        if self.force_kind == "mlp":
            return mlp_forward(self.mlp, network_input(self.mlp, x), theta[self.force_slice])
        return None

    def force(self, x, t=0.0, theta=None):
        """Force expanded to full state dimension, or None without a force model"""
        outputs = self.force_outputs(x, t, theta)
        if outputs is None:
            return None
        return ops.matmul(outputs, self._force_embed)

    def rhs(self, x, t=0.0, theta=None):
        """
        (S - diag(r)) grad H(x) + F(x, t)

        Args:
            x: States (..., d), numpy or tape variable
            t: Time, scalar or broadcastable to x[..., 0]
            theta: Parameter vector to use instead of self.params (e.g. a tape leaf)

        Returns:
            Time derivative with the shape of x
        """
        theta = self.params if theta is None else theta
        x = ops.asarray(x)
        if x.shape[-1] != self.dimension:
            raise DimensionError(f"model has dimension {self.dimension}, got state of shape {x.shape}")
        grad = self.grad_hamiltonian(x, theta)
        out = ops.matmul(grad, self.structure.T)
        if self.damping_support:
            out = out - grad * self.damping(theta)
        forcing = self.force(x, t, theta)
        if forcing is not None:
            out = out + forcing
        return out

    def to_model_state(self, x, t):
        return np.asarray(x, dtype=float)

    def state_rhs(self, x, t=0.0):
        return self.rhs(np.asarray(x, dtype=float), t)

    def copy(self) -> "PseudoHamiltonianModel":
        return replace(self, params=self.params.copy(), active=self.active.copy())


def phsi_rhs(model: PseudoHamiltonianModel, x, t=0.0):
    """Right-hand side of a pseudo-Hamiltonian model at its current parameters"""
    return model.rhs(x, t)


def init_phsi_params(model: PseudoHamiltonianModel, seed: int = 0) -> np.ndarray:
    """
    Starting parameters: coefficients 0.2, trig amplitudes and frequencies 1.0, damping 0.2,
    network weights uniform in +-1/sqrt(fan_in)

    Pruned slots stay zero.
    """
    params = np.zeros(model.n_params)
    h_coeffs, h_freqs = _library_coefficient_slots(model.h_library)
    params[h_coeffs[: model.h_library.n_monomials]] = INIT_COEFFICIENT
    params[h_coeffs[model.h_library.n_monomials:]] = INIT_TRIG
    params[h_freqs] = INIT_TRIG
    params[model.damping_slice] = INIT_DAMPING
    if model.force_kind == "symbolic":
        lib = model.force_library
        for k in range(len(model.force_components)):
            block = model.force_block(k)
            params[block.start: block.start + lib.n_monomials] = INIT_COEFFICIENT
            params[block.start + lib.n_monomials: block.stop] = INIT_TRIG
    elif model.force_kind == "mlp":
        params[model.force_slice] = model.mlp.init_params(np.random.default_rng(seed))
    params[~model.active] = 0.0
    return params


def build_phsi_model(
    system: OdeSystem,
    h_degree: int,
    include_constant: bool = False,
    force_kind: str = "none",
    force_library: Optional[BasisLibrary] = None,
    force_components: Optional[Sequence[int]] = None,
    mlp_hidden: Sequence[int] = DEFAULT_HIDDEN,
    damping: bool = True,
    seed: int = 0,
) -> PseudoHamiltonianModel:
    """
    PHSI model for a system with known S and damping support

    Args:
        system: Benchmark providing S, damping support, forced components and names
        h_degree: Degree of the Hamiltonian library
        include_constant: Include the constant monomial in H (it has no effect on the dynamics)
        force_kind: none, symbolic or mlp
        force_library: Library for symbolic forces
        force_components: Forced state indices (defaults to the system's)
        mlp_hidden: Hidden widths of the force network
        damping: Learn damping on the system's damping support
        seed: Network initialization seed

    Returns:
        Initialized model
    """
    if system.structure is None:
        raise ConfigError(f"{system.name} has no structure matrix")
    names = tuple(system.variable_names)
    h_library = build_polynomial_library(system.dimension, h_degree, include_constant, variable_names=names)
    components = tuple(force_components) if force_components is not None else tuple(system.force_components)
    mlp = None
    if force_kind == "mlp":
        mlp = build_mlp_force(system.dimension, components, hidden=mlp_hidden)
    if force_kind == "symbolic" and force_library is None:
        force_library = build_library(system.dimension, 0, trig_sin=True, variable_names=names)
    model = PseudoHamiltonianModel(
        structure=system.structure,
        h_library=h_library,
        damping_support=tuple(system.damping_support) if damping else (),
        force_kind=force_kind,
        force_library=force_library if force_kind == "symbolic" else None,
        force_components=components if force_kind == "symbolic" else (),
        mlp=mlp,
        separable_split=system.separable_split,
        variable_names=names,
    )
    model.params = init_phsi_params(model, seed)
    logger.debug(f"Built PHSI model for {system.name}: {model.n_params} parameters, force={force_kind}")
    return model


def remove_external_force(model: PseudoHamiltonianModel) -> PseudoHamiltonianModel:
    """Copy of the model without its force, describing the internal dynamics only"""
    if model.force_kind == "none":
        return model.copy()
    keep = slice(0, model.force_slice.start)
    return PseudoHamiltonianModel(
        structure=model.structure.copy(),
        h_library=model.h_library,
        damping_support=model.damping_support,
        force_kind="none",
        params=model.params[keep].copy(),
        active=model.active[keep].copy(),
        separable_split=model.separable_split,
        variable_names=model.variable_names,
    )


@dataclass(frozen=True)
class EquationEntry:
    part: str
    component: Optional[str]
    label: str
    value: Union[float, Tuple[float, float]]
    text: str


@dataclass
class EquationReport:
    """Nonzero learned terms in a fixed order: H terms, damping, then forces"""

    entries: List[EquationEntry]

    def rows(self) -> List[Tuple[str, str, str, str]]:
        return [(e.part, e.component or "", e.label, e.text) for e in self.entries]

    def part(self, name: str) -> List[EquationEntry]:
        return [e for e in self.entries if e.part == name]

    def __str__(self) -> str:
        lines = []
        for part in ("H", "R", "F", "g"):
            entries = self.part(part)
            if not entries:
                continue
            groups: Dict[str, List[str]] = {}
            for e in entries:
                groups.setdefault(e.component or "", []).append(e.text)
            for component, texts in groups.items():
                head = f"{part}[{component}]" if component else part
                lines.append(f"{head} = " + " + ".join(texts))
        return "\n".join(lines)


def library_entries(
    part: str, component: Optional[str], lib: BasisLibrary, coeffs: np.ndarray, active: np.ndarray
) -> List[EquationEntry]:
    """Entries of one library block, skipping zero and pruned terms"""
    entries = []
    position = 0
    for term in lib.terms:
        if term.kind == MONOMIAL:
            value = float(coeffs[position])
            if value != 0.0 and active[position]:
                entries.append(EquationEntry(
                    part, component, term_label(term, lib.variable_names), value,
                    term_to_string(term, value, lib.variable_names),
                ))
        elif term.kind == TRIG:
            amplitude, frequency = float(coeffs[position]), float(coeffs[position + 1])
            if amplitude != 0.0 and active[position]:
                entries.append(EquationEntry(
                    part, component, term_label(term), (amplitude, frequency),
                    term_to_string(term, (amplitude, frequency)),
                ))
        position += term.n_params
    return entries


def extract_equations(model: PseudoHamiltonianModel) -> EquationReport:
    """
    Render the learned terms

    Args:
        model: PHSI model

    Returns:
        EquationReport with zero and pruned terms omitted
    """
    params, active = model.params, model.active
    names = model.variable_names
    entries = library_entries("H", None, model.h_library, params[model.h_slice], active[model.h_slice])
    for j, index in enumerate(model.damping_support):
        slot = model.damping_slice.start + j
        value = float(params[slot])
        if value != 0.0 and active[slot]:
            entries.append(EquationEntry("R", names[index], f"r_{names[index]}", value, format(value, ".4g")))
    if model.force_kind == "symbolic":
        for k, index in enumerate(model.force_components):
            block = model.force_block(k)
            entries += library_entries("F", names[index], model.force_library, params[block], active[block])
    elif model.force_kind == "mlp":
        for index in model.mlp.components:
            entries.append(EquationEntry(
                "F", names[index], "mlp", float(model.mlp.n_params),
                f"neural network ({model.mlp.n_params} parameters)",
            ))
    return EquationReport(entries=entries)
