"""
Benchmark Systems
Exact right-hand sides, Hamiltonians and pseudo-Hamiltonian components
"""

from typing import Any, Callable, Dict, Mapping, Optional, Tuple

import numpy as np
from loguru import logger

from phsysid.core.errors import ConfigError, DimensionError, UnknownBenchmarkError

from .types import OdeSystem

GRAVITY = 9.81

# Pipes 1-4 form the cycle tank1 -> tank2 -> tank3 -> tank4 -> tank1, pipe 5 runs tank1 -> tank3
DEFAULT_TANK_PIPES = ((0, 1), (1, 2), (2, 3), (3, 0), (0, 2))

LEAK_MODES = ("clamp", "literal")


def canonical_structure(n: int) -> np.ndarray:
    """Canonical [[0, I], [-I, 0]] of size 2n"""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def polynomial_value(terms: Mapping[Tuple[int, ...], float], x) -> np.ndarray:
    """Evaluate sum of c * prod x_i^e_i over a term dictionary"""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape[:-1])
    for exponents, coeff in terms.items():
        out = out + coeff * np.prod(x ** np.asarray(exponents), axis=-1)
    return out


def polynomial_gradient(terms: Mapping[Tuple[int, ...], float], x) -> np.ndarray:
    """Power-rule gradient of a term dictionary"""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for exponents, coeff in terms.items():
        e = np.asarray(exponents)
        for k in np.nonzero(e)[0]:
            reduced = e.copy()
            reduced[k] -= 1
            out[..., k] += coeff * e[k] * np.prod(x ** reduced, axis=-1)
    return out


def _check_keys(name: str, params: Mapping[str, Any], allowed) -> None:
    unknown = sorted(set(params) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown parameters for {name}: {unknown}; allowed {sorted(allowed)}")


def _henon_heiles(params: Mapping[str, Any]) -> OdeSystem:
    _check_keys("henon_heiles", params, ())
    terms = {
        (2, 0, 0, 0): 0.5,
        (0, 2, 0, 0): 0.5,
        (0, 0, 2, 0): 0.5,
        (0, 0, 0, 2): 0.5,
        (2, 1, 0, 0): 1.0,
        (0, 3, 0, 0): -1.0 / 3.0,
    }

    def hamiltonian(x):
        q1, q2, p1, p2 = np.moveaxis(np.asarray(x, dtype=float), -1, 0)
        return 0.5 * (q1**2 + q2**2 + p1**2 + p2**2) + q1**2 * q2 - q2**3 / 3.0

    def rhs(x, t=0.0):
        q1, q2, p1, p2 = np.moveaxis(np.asarray(x, dtype=float), -1, 0)
        return np.stack([p1, p2, -q1 - 2.0 * q1 * q2, -q2 - q1**2 + q2**2], axis=-1)

    return OdeSystem(
        name="henon_heiles",
        dimension=4,
        rhs=rhs,
        hamiltonian=hamiltonian,
        grad_hamiltonian=lambda x: polynomial_gradient(terms, x),
        structure=canonical_structure(2),
        damping_truth=np.zeros(4),
        separable_split=2,
        variable_names=("q1", "q2", "p1", "p2"),
        hamiltonian_terms=terms,
    )


def _nls(params: Mapping[str, Any]) -> OdeSystem:
    _check_keys("nls", params, ())
    terms = {
        (4, 0, 0, 0): 0.25,
        (0, 4, 0, 0): 0.25,
        (0, 0, 4, 0): 0.25,
        (0, 0, 0, 4): 0.25,
        (2, 0, 2, 0): 0.5,
        (0, 2, 0, 2): 0.5,
        (2, 2, 0, 0): -1.0,
        (0, 0, 2, 2): -1.0,
        (2, 0, 0, 2): 1.0,
        (0, 2, 2, 0): 1.0,
        (1, 1, 1, 1): -4.0,
    }

    def hamiltonian(x):
        q1, q2, p1, p2 = np.moveaxis(np.asarray(x, dtype=float), -1, 0)
        return (
            0.25 * (q1**2 + p1**2) ** 2
            + 0.25 * (q2**2 + p2**2) ** 2
            - (q1**2 * q2**2 + p1**2 * p2**2 - q1**2 * p2**2 - q2**2 * p1**2 + 4.0 * q1 * q2 * p1 * p2)
        )

    def grad_h(x):
        q1, q2, p1, p2 = np.moveaxis(np.asarray(x, dtype=float), -1, 0)
        return np.stack([
            (q1**2 + p1**2) * q1 - 2.0 * q1 * q2**2 + 2.0 * q1 * p2**2 - 4.0 * q2 * p1 * p2,
            (q2**2 + p2**2) * q2 - 2.0 * q1**2 * q2 + 2.0 * q2 * p1**2 - 4.0 * q1 * p1 * p2,
            (q1**2 + p1**2) * p1 - 2.0 * p1 * p2**2 + 2.0 * q2**2 * p1 - 4.0 * q1 * q2 * p2,
            (q2**2 + p2**2) * p2 - 2.0 * p1**2 * p2 + 2.0 * q1**2 * p2 - 4.0 * q1 * q2 * p1,
        ], axis=-1)

    def rhs(x, t=0.0):
        grad = grad_h(x)
        return np.concatenate([grad[..., 2:], -grad[..., :2]], axis=-1)

    return OdeSystem(
        name="nls",
        dimension=4,
        rhs=rhs,
        hamiltonian=hamiltonian,
        grad_hamiltonian=grad_h,
        structure=canonical_structure(2),
        damping_truth=np.zeros(4),
        variable_names=("q1", "q2", "p1", "p2"),
        hamiltonian_terms=terms,
    )


def _spring_constants(name: str, params: Mapping[str, Any], allowed, defaults: Dict[str, float]) -> Dict[str, float]:
    _check_keys(name, params, allowed)
    values = {**defaults, **{k: float(v) for k, v in params.items()}}
    if values["k"] <= 0 or values["m"] <= 0:
        raise ConfigError(f"{name} needs positive k and m, got k={values['k']}, m={values['m']}")
    return values


def _mass_spring(params: Mapping[str, Any]) -> OdeSystem:
    defaults = {"k": 1.0, "m": 1.0, "c": 0.3, "alpha": 2.0, "omega": 0.5}
    v = _spring_constants("mass_spring", params, defaults, defaults)
    k, m, c, alpha, omega = v["k"], v["m"], v["c"], v["alpha"], v["omega"]
    if c < 0:
        raise ConfigError(f"damping c must be nonnegative, got {c}")
    terms = {(2, 0): 0.5 * k, (0, 2): 0.5 / m}

    def rhs(x, t=0.0):
        x = np.asarray(x, dtype=float)
        q, p = x[..., 0], x[..., 1]
        drive = alpha * np.sin(omega * np.asarray(t, dtype=float))
        return np.stack([p / m, -k * q - c * p / m + drive], axis=-1)

    def force(x, t=0.0):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        out[..., 1] = alpha * np.sin(omega * np.asarray(t, dtype=float))
        return out

    return OdeSystem(
        name="mass_spring",
        dimension=2,
        rhs=rhs,
        hamiltonian=lambda x: polynomial_value(terms, x),
        grad_hamiltonian=lambda x: polynomial_gradient(terms, x),
        structure=canonical_structure(1),
        damping_truth=np.array([0.0, c]),
        force_truth=force,
        separable_split=1,
        variable_names=("q", "p"),
        hamiltonian_terms=terms,
        force_params={"alpha": alpha, "omega": omega},
        force_components=(1,),
        damping_support=(1,),
        params=v,
    )


def _oscillator(params: Mapping[str, Any]) -> OdeSystem:
    defaults = {"k": 1.0, "m": 1.0}
    v = _spring_constants("oscillator", params, defaults, defaults)
    k, m = v["k"], v["m"]
    terms = {(2, 0): 0.5 * k, (0, 2): 0.5 / m}

    def rhs(x, t=0.0):
        x = np.asarray(x, dtype=float)
        return np.stack([x[..., 1] / m, -k * x[..., 0]], axis=-1)

    return OdeSystem(
        name="oscillator",
        dimension=2,
        rhs=rhs,
        hamiltonian=lambda x: polynomial_value(terms, x),
        grad_hamiltonian=lambda x: polynomial_gradient(terms, x),
        structure=canonical_structure(1),
        damping_truth=np.zeros(2),
        separable_split=1,
        variable_names=("q", "p"),
        hamiltonian_terms=terms,
        params=v,
    )


def incidence_matrix(pipes, n_tanks: int) -> np.ndarray:
    """
    Pipe-by-tank incidence matrix

    Args:
        pipes: (source tank, target tank) per pipe, zero-based
        n_tanks: Number of tanks

    Returns:
        Matrix B with -1 at the tank a pipe leaves and +1 at the tank it enters
    """
    B = np.zeros((len(pipes), n_tanks))
    for i, (source, target) in enumerate(pipes):
        if source == target or not (0 <= source < n_tanks and 0 <= target < n_tanks):
            raise ConfigError(f"pipe {i + 1} connects invalid tanks {source + 1} -> {target + 1}")
        B[i, source] = -1.0
        B[i, target] = 1.0
    return B


def _per_element(name: str, value, count: int) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(count, float(arr[0]))
    if arr.shape != (count,):
        raise ConfigError(f"{name} needs {count} entries, got {arr.size}")
    return arr


def _tanks(params: Mapping[str, Any]) -> OdeSystem:
    allowed = ("rho", "J", "A", "r_p", "g", "pipes", "B", "leak")
    _check_keys("tanks", params, allowed)
    if "B" in params:
        B = np.asarray(params["B"], dtype=float)
        if B.ndim != 2 or not np.all(np.isin(B, (-1.0, 0.0, 1.0))):
            raise ConfigError("B must be a pipes-by-tanks matrix with entries in {-1, 0, 1}")
    else:
        pipes = params.get("pipes", DEFAULT_TANK_PIPES)
        n_tanks = 1 + max(max(pair) for pair in pipes)
        B = incidence_matrix([tuple(int(i) for i in pair) for pair in pipes], n_tanks)
    n_pipes, n_tanks = B.shape

    rho = float(params.get("rho", 1.0))
    gravity = float(params.get("g", GRAVITY))
    J = _per_element("J", params.get("J", 0.02), n_pipes)
    A = _per_element("A", params.get("A", 1.0), n_tanks)
    r_p = np.asarray(params.get("r_p", (0.03, 0.03, 0.09, 0.05, 0.05)), dtype=float)
    if r_p.shape != (n_pipes,):
        raise ConfigError(f"r_p needs one friction coefficient per pipe ({n_pipes}), got {r_p.size}")
    if rho <= 0 or np.any(J <= 0) or np.any(A <= 0):
        raise ConfigError("rho, J and A must be positive")
    leak = params.get("leak", "clamp")
    if leak not in LEAK_MODES:
        raise ConfigError(f"leak must be one of {LEAK_MODES}, got {leak!r}")

    d = n_pipes + n_tanks
    leak_index = d - 1
    pressure = gravity * rho / A

    structure = np.zeros((d, d))
    structure[:n_pipes, n_pipes:] = -B
    structure[n_pipes:, :n_pipes] = B.T

    terms: Dict[Tuple[int, ...], float] = {}
    for i in range(n_pipes):
        e = [0] * d
        e[i] = 2
        terms[tuple(e)] = 0.5 / J[i]
    for j in range(n_tanks):
        e = [0] * d
        e[n_pipes + j] = 2
        terms[tuple(e)] = 0.5 * pressure[j]

    def grad_h(x):
        x = np.asarray(x, dtype=float)
        return np.concatenate([x[..., :n_pipes] / J, pressure * x[..., n_pipes:]], axis=-1)

    def hamiltonian(x):
        x = np.asarray(x, dtype=float)
        return np.sum(0.5 * x[..., :n_pipes] ** 2 / J, axis=-1) + np.sum(0.5 * pressure * x[..., n_pipes:] ** 2, axis=-1)

    def leak_rate(level):
        lower = 0.3 if leak == "literal" else 0.0
        return -10.0 * np.minimum(0.3, np.maximum(level, lower))

    def force(x, t=0.0):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        out[..., leak_index] = leak_rate(x[..., leak_index])
        return out

    def rhs(x, t=0.0):
        x = np.asarray(x, dtype=float)
        flow = x[..., :n_pipes] / J
        head = pressure * x[..., n_pipes:]
        phi_dot = -r_p * flow - head @ B.T
        mu_dot = flow @ B
        mu_dot[..., -1] = mu_dot[..., -1] + leak_rate(x[..., leak_index])
        return np.concatenate([phi_dot, mu_dot], axis=-1)

    names = tuple(f"phi{i + 1}" for i in range(n_pipes)) + tuple(f"mu{j + 1}" for j in range(n_tanks))
    return OdeSystem(
        name="tanks",
        dimension=d,
        rhs=rhs,
        hamiltonian=hamiltonian,
        grad_hamiltonian=grad_h,
        structure=structure,
        damping_truth=np.concatenate([r_p, np.zeros(n_tanks)]),
        force_truth=force,
        variable_names=names,
        hamiltonian_terms=terms,
        force_components=(leak_index,),
        damping_support=tuple(range(n_pipes)),
        params={"rho": rho, "g": gravity, "J": J.tolist(), "A": A.tolist(), "r_p": r_p.tolist(), "B": B.tolist(), "leak": leak},
    )


BENCHMARKS: Dict[str, Callable[[Mapping[str, Any]], OdeSystem]] = {
    "henon_heiles": _henon_heiles,
    "nls": _nls,
    "mass_spring": _mass_spring,
    "tanks": _tanks,
    "oscillator": _oscillator,
}


def make_benchmark(name: str, params: Optional[Mapping[str, Any]] = None) -> OdeSystem:
    """
    Build a benchmark system with its ground-truth decomposition

    Args:
        name: henon_heiles, nls, mass_spring, tanks or oscillator (hyphens accepted)
        params: Overrides of the system constants

    Returns:
        OdeSystem
    """
    key = str(name).lower().replace("-", "_")
    factory = BENCHMARKS.get(key)
    if factory is None:
        raise UnknownBenchmarkError(f"unknown benchmark '{name}'; expected one of {sorted(BENCHMARKS)}")
    system = factory(dict(params or {}))
    logger.debug(f"Built benchmark {system.name} (d={system.dimension})")
    return system


def eval_rhs(system: OdeSystem, x, t: float = 0.0) -> np.ndarray:
    """
    Evaluate g(x, t)

    Args:
        system: ODE system
        x: State (d,) or batch (m, d)
        t: Time

    Returns:
        Time derivative with the shape of x
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != system.dimension:
        raise DimensionError(f"{system.name} has dimension {system.dimension}, got state of shape {x.shape}")
    return system.rhs(x, t)


def rhs_polynomial_terms(system: OdeSystem) -> Dict[int, Dict[Tuple[int, ...], float]]:
    """
    Expand (S - diag(r)) grad H into per-component monomial coefficients

    External forces are not included.

    Returns:
        {component: {exponents: coefficient}} with exact zeros removed
    """
    if not system.has_decomposition or not system.hamiltonian_terms:
        raise ConfigError(f"{system.name} has no polynomial decomposition")
    d = system.dimension
    M = system.structure.copy()
    if system.damping_truth is not None:
        M = M - np.diag(system.damping_truth)
    gradient_terms = [dict() for _ in range(d)]
    for exponents, coeff in system.hamiltonian_terms.items():
        for k in range(d):
            if exponents[k] == 0:
                continue
            reduced = list(exponents)
            reduced[k] -= 1
            key = tuple(reduced)
            gradient_terms[k][key] = gradient_terms[k].get(key, 0.0) + coeff * exponents[k]
    out: Dict[int, Dict[Tuple[int, ...], float]] = {}
    for i in range(d):
        component: Dict[Tuple[int, ...], float] = {}
        for k in range(d):
            if M[i, k] == 0.0:
                continue
            for key, value in gradient_terms[k].items():
                component[key] = component.get(key, 0.0) + M[i, k] * value
        out[i] = {key: value for key, value in component.items() if value != 0.0}
    return out
