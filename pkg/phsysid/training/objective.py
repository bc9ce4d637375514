"""
Training Objective
Squared residual of the discretization scheme plus L1 penalties
"""

from typing import Tuple

import numpy as np

from phsysid.autodiff import ops
from phsysid.core.errors import TrainingDivergedError
from phsysid.integrators import psi

Batch = Tuple[np.ndarray, np.ndarray, np.ndarray]


def _l1(theta, slots: np.ndarray):
    if slots.size == 0:
        return 0.0
    return ops.sum_(ops.abs_(theta[slots]))


def penalty(model, batch: Batch, lam_h: float, lam_f: float, lam_r: float, theta=None):
    """
    L1 penalty: lam_h on H (or baseline g) coefficients, lam_f on the force, lam_r on damping

    An MLP force is penalized through the batch mean of the summed absolute outputs.
    """
    theta = model.params if theta is None else theta
    groups = model.coefficient_slots()
    total = 0.0
    if lam_h and "H" in groups:
        total = total + lam_h * _l1(theta, groups["H"])
    if lam_h and "g" in groups:
        total = total + lam_h * _l1(theta, groups["g"])
    if lam_r and "R" in groups:
        total = total + lam_r * _l1(theta, groups["R"])
    if lam_f and "F" in groups:
        total = total + lam_f * _l1(theta, groups["F"])
        if getattr(model, "force_kind", "none") == "mlp":
            x_n, _, t_n = batch
            outputs = model.force_outputs(x_n, t_n, theta)
            total = total + lam_f * ops.sum_(ops.abs_(outputs)) * (1.0 / x_n.shape[0])
    return total


def loss_terms(
    model,
    batch: Batch,
    dt: float,
    integrator,
    lam_h: float = 0.0,
    lam_f: float = 0.0,
    lam_r: float = 0.0,
    reg_active: bool = True,
    theta=None,
):
    """
    (total, data term, penalty) of one batch

    Args:
        model: PseudoHamiltonianModel or BaselineModel
        batch: (x_n, x_np1, t_n) with shapes (m, d), (m, d), (m,)
        dt: Step shared by every pair
        integrator: Scheme name or IntegratorScheme
        lam_h: H / baseline coefficient weight
        lam_f: Force weight
        lam_r: Damping weight
        reg_active: Add the penalties
        theta: Parameter vector (tape leaf when differentiating)

    Returns:
        Tuple of scalars (numpy or tape variables)
    """
    theta = model.params if theta is None else theta
    x_n, x_np1, t_n = batch
    z_n = model.to_model_state(x_n, t_n)
    z_np1 = model.to_model_state(x_np1, t_n + dt)

    def g(x, t):
        return model.rhs(x, t, theta)

    stage = psi(integrator, g, z_n, z_np1, t_n, dt, split=model.separable_split)
    residual = (z_np1 - z_n) * (1.0 / dt) - stage
    data = ops.sum_(residual * residual) * (1.0 / z_n.shape[0])
    value = data.value if ops.is_var(data) else data
    if not np.all(np.isfinite(value)):
        raise TrainingDivergedError("non-finite scheme residual")
    extra = penalty(model, batch, lam_h, lam_f, lam_r, theta) if reg_active else 0.0
    return data + extra, data, extra


def loss(model, batch: Batch, dt: float, integrator, lam_h=0.0, lam_f=0.0, lam_r=0.0, reg_active=True, theta=None):
    """Mean squared scheme residual over the batch plus penalties when reg_active"""
    return loss_terms(model, batch, dt, integrator, lam_h, lam_f, lam_r, reg_active, theta)[0]
