"""
Reference Simulation
Fixed-step classic RK4 with substeps, used for data generation and evaluation
"""

from typing import Tuple

import numpy as np
from loguru import logger

from phsysid.core.errors import ConfigError, SimulationError
from phsysid.dynamics.types import OdeSystem, Trajectory, to_state_vector

BLOWUP_MODES = ("raise", "mask")


def _output_count(t_end: float, dt_out: float) -> int:
    if dt_out <= 0:
        raise ConfigError(f"dt_out must be positive, got {dt_out}")
    if t_end < 0:
        raise ConfigError(f"t_end must be nonnegative, got {t_end}")
    n_out = int(round(t_end / dt_out))
    if abs(n_out * dt_out - t_end) > 1e-9 * max(1.0, abs(t_end)):
        raise ConfigError(f"t_end={t_end} is not a multiple of dt_out={dt_out}")
    return n_out


def _rk4_substep(g, x, t, h):
    k1 = g(x, t)
    k2 = g(x + 0.5 * h * k1, t + 0.5 * h)
    k3 = g(x + 0.5 * h * k2, t + 0.5 * h)
    k4 = g(x + h * k3, t + h)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def simulate_batch(
    g,
    x0s,
    t_end: float,
    dt_out: float,
    substeps: int = 100,
    on_blowup: str = "raise",
    t0: float = 0.0,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Integrate many initial states at once

    Args:
        g: Vectorized right-hand side g(x, t) for x of shape (m, d)
        x0s: Initial states (m, d)
        t_end: Final time relative to t0 (a multiple of dt_out)
        dt_out: Output spacing
        substeps: RK4 steps per output interval
        on_blowup: "raise" for SimulationError, "mask" to freeze failed rows as NaN
        t0: Start time

    Returns:
        (times (n,), states (n, m, d), blown_up (m,) bool)
    """
    if substeps < 1:
        raise ConfigError(f"substeps must be >= 1, got {substeps}")
    if on_blowup not in BLOWUP_MODES:
        raise ConfigError(f"on_blowup must be one of {BLOWUP_MODES}, got {on_blowup!r}")
    n_out = _output_count(t_end, dt_out)
    x = np.array(x0s, dtype=float)
    if x.ndim != 2:
        raise ConfigError(f"initial states must have shape (m, d), got {x.shape}")

    times = t0 + dt_out * np.arange(n_out + 1)
    states = np.empty((n_out + 1,) + x.shape)
    states[0] = x
    blown = ~np.all(np.isfinite(x), axis=1)
    h = dt_out / substeps

    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(n_out):
            t = times[n]
            for k in range(substeps):
                x = _rk4_substep(g, x, t + k * h, h)
            bad = ~np.all(np.isfinite(x), axis=1) & ~blown
            if bad.any():
                index = int(np.argmax(bad))
                if on_blowup == "raise":
                    logger.error(f"Non-finite state in trajectory {index} at t={times[n + 1]:.6g}")
                    raise SimulationError(
                        f"non-finite state in trajectory {index} at t={times[n + 1]:.6g}",
                        trajectory=index,
                        time=float(times[n + 1]),
                    )
                blown |= bad
            x[blown] = np.nan
            states[n + 1] = x
    return times, states, blown


def reference_simulate(system, x0, t_end: float, dt_out: float, substeps: int = 100, t0: float = 0.0) -> Trajectory:
    """
    High-accuracy trajectory of one initial state

    Args:
        system: OdeSystem or a right-hand side g(x, t)
        x0: Initial state
        t_end: Final time (t_end=0 gives the single point x0)
        dt_out: Output spacing
        substeps: RK4 steps per output interval

    Returns:
        Trajectory sampled every dt_out
    """
    if isinstance(system, OdeSystem):
        g, d = system.rhs, system.dimension
    else:
        g, d = system, None
    x0 = to_state_vector(x0, d)
    times, states, _ = simulate_batch(g, x0[None, :], t_end, dt_out, substeps=substeps, t0=t0)
    return Trajectory(times=times, states=states[:, 0, :], dt=dt_out)
