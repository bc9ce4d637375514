"""
Discretization Schemes
Maps Psi of (x_np1 - x_n)/dt = Psi_dt(g, x_n, x_np1, t_n) with their properties
"""

from dataclasses import dataclass
from math import sqrt
from typing import Callable, Dict, Optional

import numpy as np

from phsysid.autodiff import ops
from phsysid.core.errors import ConfigError, SchemeUnavailableError

Rhs = Callable  # (x, t) -> dx/dt, works on numpy arrays and tape variables

SQRT3 = sqrt(3.0)
C1 = 0.5 - SQRT3 / 6.0
C2 = 0.5 + SQRT3 / 6.0

# Triple-jump composition weights for the fourth-order partitioned method
YOSHIDA_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
YOSHIDA_W0 = 1.0 - 2.0 * YOSHIDA_W1


@dataclass(frozen=True)
class ButcherTableau:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray


@dataclass(frozen=True)
class IntegratorScheme:
    """Named discretization with the properties used to choose it"""

    name: str
    order: int
    g_evals: int
    explicit: bool
    mono_implicit: bool
    symmetric: bool
    symplectic: bool
    requires_separable: bool = False
    available: bool = True
    tableau: Optional[ButcherTableau] = None


def _srk4_tableau() -> ButcherTableau:
    s = SQRT3
    A = np.array([
        [0.25, 0.0, -s / 6.0, 0.25],
        [0.25 - s / 12.0, 0.0, 0.0, 0.25 - s / 12.0],
        [0.25 + s / 12.0, 0.0, 0.0, 0.25 + s / 12.0],
        [0.25, s / 6.0, 0.0, 0.25],
    ])
    return ButcherTableau(A=A, b=np.array([0.5, 0.0, 0.0, 0.5]), c=np.array([C1, C1, C2, C2]))


def _rk4_tableau() -> ButcherTableau:
    A = np.array([
        [0.0, 0.0, 0.0, 0.0],
        [0.5, 0.0, 0.0, 0.0],
        [0.0, 0.5, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
    ])
    return ButcherTableau(A=A, b=np.array([1.0, 2.0, 2.0, 1.0]) / 6.0, c=np.array([0.0, 0.5, 0.5, 1.0]))


SCHEMES: Dict[str, IntegratorScheme] = {
    "euler": IntegratorScheme(
        "euler", order=1, g_evals=1, explicit=True, mono_implicit=True, symmetric=False, symplectic=False,
        tableau=ButcherTableau(A=np.zeros((1, 1)), b=np.ones(1), c=np.zeros(1)),
    ),
    "midpoint": IntegratorScheme(
        "midpoint", order=2, g_evals=1, explicit=False, mono_implicit=True, symmetric=True, symplectic=True,
        tableau=ButcherTableau(A=np.full((1, 1), 0.5), b=np.ones(1), c=np.full(1, 0.5)),
    ),
    "rk4": IntegratorScheme(
        "rk4", order=4, g_evals=4, explicit=True, mono_implicit=True, symmetric=False, symplectic=False,
        tableau=_rk4_tableau(),
    ),
    "srk4": IntegratorScheme(
        "srk4", order=4, g_evals=4, explicit=False, mono_implicit=True, symmetric=True, symplectic=False,
        tableau=_srk4_tableau(),
    ),
    # Coefficients are not transcribed; metadata only
    "srk6": IntegratorScheme(
        "srk6", order=6, g_evals=5, explicit=False, mono_implicit=True, symmetric=True, symplectic=False,
        available=False,
    ),
    # Explicit, mono-implicit and symplectic for separable systems only
    "prk4": IntegratorScheme(
        "prk4", order=4, g_evals=7, explicit=True, mono_implicit=True, symmetric=True, symplectic=True,
        requires_separable=True,
    ),
}


def get_scheme(name) -> IntegratorScheme:
    """
    Look up a scheme by name

    Args:
        name: Scheme name or an IntegratorScheme (returned unchanged)

    Returns:
        IntegratorScheme
    """
    if isinstance(name, IntegratorScheme):
        return name
    scheme = SCHEMES.get(str(name).lower())
    if scheme is None:
        raise ConfigError(f"unknown integrator '{name}'; expected one of {sorted(SCHEMES)}")
    return scheme


def _join(q, p):
    """Concatenate position and momentum blocks along the last axis"""
    columns = [q[..., i] for i in range(q.shape[-1])] + [p[..., i] for i in range(p.shape[-1])]
    return ops.stack(columns, axis=-1)


def _leapfrog(g: Rhs, q, p, t, h, n: int):
    """One kick-drift-kick substep of length h"""
    p_half = p + (0.5 * h) * g(_join(q, p), t)[..., n:]
    q_new = q + h * g(_join(q, p_half), t + 0.5 * h)[..., :n]
    p_new = p_half + (0.5 * h) * g(_join(q_new, p_half), t + h)[..., n:]
    return q_new, p_new


def prk4_flow(g: Rhs, x_n, t_n, dt, split: int):
    """Fourth-order triple-jump composition of leapfrog substeps"""
    q, p = x_n[..., :split], x_n[..., split:]
    t = t_n
    for weight in (YOSHIDA_W1, YOSHIDA_W0, YOSHIDA_W1):
        h = weight * dt
        q, p = _leapfrog(g, q, p, t, h, split)
        t = t + h
    return _join(q, p)


def psi(scheme, g: Rhs, x_n, x_np1, t_n, dt, split: Optional[int] = None):
    """
    Evaluate Psi_dt(g, x_n, x_np1, t_n) without root-finding

    Args:
        scheme: Scheme name or IntegratorScheme
        g: Right-hand side g(x, t)
        x_n: States at t_n (..., d)
        x_np1: States at t_n + dt (ignored by explicit schemes)
        t_n: Time(s) of x_n
        dt: Step size
        split: Number of position coordinates; required by prk4

    Returns:
        Psi with the shape of x_n
    """
    scheme = get_scheme(scheme)
    if not scheme.available:
        raise SchemeUnavailableError(f"scheme '{scheme.name}' has no coefficients in this build")

    if scheme.name == "euler":
        return g(x_n, t_n)

    if scheme.name == "midpoint":
        return g((x_n + x_np1) * 0.5, t_n + 0.5 * dt)

    if scheme.name == "rk4":
        k1 = g(x_n, t_n)
        k2 = g(x_n + (0.5 * dt) * k1, t_n + 0.5 * dt)
        k3 = g(x_n + (0.5 * dt) * k2, t_n + 0.5 * dt)
        k4 = g(x_n + dt * k3, t_n + dt)
        return (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (1.0 / 6.0)

    if scheme.name == "srk4":
        mid = (x_n + x_np1) * 0.5
        inner_a = g(C1 * x_n + C2 * x_np1, t_n + C2 * dt)
        inner_b = g(C2 * x_n + C1 * x_np1, t_n + C1 * dt)
        outer_a = g(mid - (SQRT3 / 6.0 * dt) * inner_a, t_n + C1 * dt)
        outer_b = g(mid + (SQRT3 / 6.0 * dt) * inner_b, t_n + C2 * dt)
        return (outer_a + outer_b) * 0.5

    if scheme.name == "prk4":
        if split is None:
            raise SchemeUnavailableError("prk4 needs a separable (q, p) split of the state")
        if dt == 0:
            return g(x_n, t_n)
        return (prk4_flow(g, x_n, t_n, dt, split) - x_n) * (1.0 / dt)

    raise SchemeUnavailableError(f"no evaluation rule for scheme '{scheme.name}'")


def scheme_residual(scheme, g: Rhs, x_n, x_np1, t_n, dt, split: Optional[int] = None):
    """x_np1 - x_n - dt * Psi; symmetric schemes negate it under the endpoint/step reversal"""
    return x_np1 - x_n - dt * psi(scheme, g, x_n, x_np1, t_n, dt, split=split)
