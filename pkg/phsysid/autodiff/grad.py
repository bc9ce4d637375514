"""
Gradient Entry Points
Reverse-mode gradients of scalar losses and a central-difference oracle
"""

from typing import Callable, Tuple

import numpy as np

from .tape import Tape, Var

LossBuilder = Callable[[Var], Var]


def grad(loss_builder: LossBuilder, params) -> Tuple[float, np.ndarray]:
    """
    Record loss_builder on a fresh tape and run the reverse pass

    Args:
        loss_builder: Maps the parameter leaf to a scalar tape variable
        params: Flat parameter vector

    Returns:
        (loss value, gradient aligned with params)
    """
    params = np.asarray(params, dtype=float)
    tape = Tape()
    theta = tape.parameter(params)
    loss = loss_builder(theta)
    if not isinstance(loss, Var):
        return float(np.asarray(loss).reshape(())), np.zeros_like(params)
    adjoints = tape.backward(loss)
    g = adjoints[theta.index]
    if g is None:
        g = np.zeros_like(params)
    return float(loss.value.reshape(())), np.asarray(g, dtype=float).reshape(params.shape)


def evaluate(loss_builder: LossBuilder, params) -> float:
    """Primal value of the loss without keeping the tape"""
    tape = Tape()
    loss = loss_builder(tape.parameter(np.asarray(params, dtype=float)))
    return float(np.asarray(loss.value if isinstance(loss, Var) else loss).reshape(()))


def finite_diff_check(loss_builder: LossBuilder, params, h: float = 1e-6) -> float:
    """
    Compare reverse-mode and central-difference gradients

    The relative error of slot i is |g_ad - g_fd| / max(|g_ad|, |g_fd|, 1e-3 * max|g_fd|),
    so slots whose gradient vanishes are measured against the overall gradient scale.

    Args:
        loss_builder: Maps the parameter leaf to a scalar tape variable
        params: Point to check
        h: Central-difference step

    Returns:
        Maximum relative error over parameters
    """
    params = np.asarray(params, dtype=float)
    _, g_ad = grad(loss_builder, params)
    g_fd = np.zeros_like(params)
    for i in range(params.size):
        step = np.zeros_like(params)
        step.flat[i] = h
        g_fd.flat[i] = (evaluate(loss_builder, params + step) - evaluate(loss_builder, params - step)) / (2.0 * h)
    scale = max(1e-3 * float(np.max(np.abs(g_fd))) if g_fd.size else 0.0, 1e-12)
    denom = np.maximum(np.maximum(np.abs(g_ad), np.abs(g_fd)), scale)
    return float(np.max(np.abs(g_ad - g_fd) / denom)) if params.size else 0.0
