"""
Time Stepping
Single steps of every scheme, the partitioned fourth-order step and order estimation
"""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from phsysid.core.errors import ConfigError, SchemeUnavailableError

from .schemes import Rhs, get_scheme, prk4_flow, psi


@dataclass
class StepResult:
    """Outcome of one step; converged implies the fixed-point residual met tol"""

    x_next: np.ndarray
    converged: bool
    iterations: int


def step(
    scheme,
    g: Rhs,
    x_n,
    t_n: float,
    dt: float,
    tol: float = 1e-12,
    max_iter: int = 100,
    relaxation: float = 1.0,
    split: Optional[int] = None,
) -> StepResult:
    """
    Advance one step of size dt

    Explicit schemes use the closed form. Mono-implicit schemes solve
    x = x_n + dt * Psi(g, x_n, x, t_n) by damped fixed-point iteration started
    from an Euler predictor.

    Args:
        scheme: Scheme name or IntegratorScheme
        g: Right-hand side g(x, t)
        x_n: Current state(s), shape (d,) or (m, d)
        t_n: Current time
        dt: Step size
        tol: Infinity-norm tolerance on the fixed-point residual
        max_iter: Iteration cap
        relaxation: Fixed-point damping factor in (0, 1]
        split: Position count for prk4

    Returns:
        StepResult; on non-convergence the best iterate with converged=False
    """
    scheme = get_scheme(scheme)
    if tol <= 0:
        raise ConfigError(f"tol must be positive, got {tol}")
    if not 0.0 < relaxation <= 1.0:
        raise ConfigError(f"relaxation must lie in (0, 1], got {relaxation}")
    x_n = np.asarray(x_n, dtype=float)

    if scheme.explicit:
        x_next = x_n + dt * psi(scheme, g, x_n, x_n, t_n, dt, split=split)
        return StepResult(x_next=x_next, converged=True, iterations=0)

    x_k = x_n + dt * np.asarray(g(x_n, t_n), dtype=float)
    best, best_residual = x_k, np.inf
    for iteration in range(1, max_iter + 1):
        target = x_n + dt * psi(scheme, g, x_n, x_k, t_n, dt, split=split)
        residual = float(np.max(np.abs(x_k - target))) if x_k.size else 0.0
        if residual < best_residual:
            best, best_residual = x_k, residual
        if residual <= tol:
            return StepResult(x_next=x_k, converged=True, iterations=iteration)
        if not np.isfinite(residual):
            break
        x_k = (1.0 - relaxation) * x_k + relaxation * target

    logger.warning(
        f"Fixed-point solve for {scheme.name} did not converge in {max_iter} iterations "
        f"(best residual {best_residual:.3e}, dt={dt})"
    )
    return StepResult(x_next=best, converged=False, iterations=max_iter)


def prk4_step(g_separable: Rhs, q_n, p_n, dt: float, t_n: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Partitioned fourth-order step for a separable system

    Args:
        g_separable: Right-hand side of the joined state (q, p)
        q_n: Positions
        p_n: Momenta, same length as q_n
        dt: Step size (dt=0 is the identity)
        t_n: Current time

    Returns:
        (q_np1, p_np1)
    """
    q_n = np.asarray(q_n, dtype=float)
    p_n = np.asarray(p_n, dtype=float)
    if q_n.shape != p_n.shape:
        raise SchemeUnavailableError(f"prk4 needs matching (q, p) blocks, got {q_n.shape} and {p_n.shape}")
    n = q_n.shape[-1]
    x_n = np.concatenate([q_n, p_n], axis=-1)
    x_next = prk4_flow(g_separable, x_n, t_n, dt, n)
    return x_next[..., :n], x_next[..., n:]


@dataclass(frozen=True)
class ConvergenceProblem:
    """Scalar or vector ODE with a closed-form solution"""

    g: Callable
    x0: np.ndarray
    t_end: float
    exact: Callable[[float], np.ndarray]
    split: Optional[int] = None


EXPONENTIAL_GROWTH = ConvergenceProblem(
    g=lambda x, t: x,
    x0=np.array([1.0]),
    t_end=1.0,
    exact=lambda t: np.array([np.exp(t)]),
)

HARMONIC_OSCILLATOR = ConvergenceProblem(
    g=lambda x, t: np.stack([x[..., 1], -x[..., 0]], axis=-1),
    x0=np.array([1.0, 0.0]),
    t_end=1.0,
    exact=lambda t: np.array([np.cos(t), -np.sin(t)]),
    split=1,
)


def convergence_order(
    scheme,
    test_problem: ConvergenceProblem = EXPONENTIAL_GROWTH,
    dt_list: Sequence[float] = (0.2, 0.1, 0.05, 0.025),
) -> float:
    """
    Least-squares slope of log global error against log dt

    Args:
        scheme: Scheme name or IntegratorScheme
        test_problem: Problem with an analytic solution
        dt_list: At least three distinct positive step sizes dividing t_end

    Returns:
        Estimated order
    """
    scheme = get_scheme(scheme)
    dts = np.asarray(dt_list, dtype=float)
    if dts.size < 3 or np.any(dts <= 0) or np.unique(dts).size != dts.size:
        raise ConfigError(f"dt_list needs at least three distinct positive values, got {list(dt_list)}")

    errors = []
    for dt in dts:
        n_steps = int(round(test_problem.t_end / dt))
        if n_steps < 1 or abs(n_steps * dt - test_problem.t_end) > 1e-9:
            raise ConfigError(f"dt={dt} does not divide t_end={test_problem.t_end}")
        x = np.array(test_problem.x0, dtype=float)
        for k in range(n_steps):
            x = step(scheme, test_problem.g, x, k * dt, dt, split=test_problem.split).x_next
        errors.append(float(np.max(np.abs(x - test_problem.exact(test_problem.t_end)))))

    errors = np.asarray(errors)
    if np.any(errors <= 0) or not np.all(np.isfinite(errors)):
        raise ConfigError(f"global errors {errors.tolist()} admit no log-log fit")
    slope, _ = np.polyfit(np.log(dts), np.log(errors), 1)
    return float(slope)
