"""
Optimizer and Pruning
Adam with decoupled weight decay, and magnitude pruning with a history window
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from phsysid.core.errors import DimensionError


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(m=np.zeros(n), v=np.zeros(n))


def adam_step(
    state: AdamState,
    params: np.ndarray,
    grads: np.ndarray,
    learning_rate: float,
    weight_decay: float = 0.0,
    active: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, AdamState]:
    """
    One bias-corrected Adam update

    Weight decay shrinks parameters by learning_rate * weight_decay * theta outside the
    adaptive step. Inactive (pruned) slots keep their value and moments.

    Returns:
        (new parameters, new state)
    """
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise DimensionError(f"params {params.shape}, grads {grads.shape}, moments {state.m.shape} differ")
    active = np.ones(params.shape, dtype=bool) if active is None else np.asarray(active, dtype=bool)

    step = state.step + 1
    g = np.where(active, grads, 0.0)
    m = np.where(active, state.beta1 * state.m + (1.0 - state.beta1) * g, state.m)
    v = np.where(active, state.beta2 * state.v + (1.0 - state.beta2) * g * g, state.v)
    m_hat = m / (1.0 - state.beta1**step)
    v_hat = v / (1.0 - state.beta2**step)
    update = learning_rate * (m_hat / (np.sqrt(v_hat) + state.eps) + weight_decay * params)
    new_params = np.where(active, params - update, params)
    return new_params, AdamState(m=m, v=v, step=step, beta1=state.beta1, beta2=state.beta2, eps=state.eps)


def prune(
    params: np.ndarray,
    active: np.ndarray,
    history: Sequence[np.ndarray],
    threshold: float,
    window: int = 1,
    prunable: Optional[np.ndarray] = None,
    partners: Optional[Dict[int, int]] = None,
) -> Tuple[np.ndarray, np.ndarray, List[int]]:
    """
    Mask parameters whose magnitude stayed strictly below threshold for the last window snapshots

    Args:
        params: Current parameters
        active: Current mask (False = pruned)
        history: Epoch-end parameter snapshots, oldest first
        threshold: Pruning threshold
        window: Number of most recent snapshots that must all be below threshold
        prunable: Boolean mask of slots eligible for pruning (all when None)
        partners: Slot -> slot pruned along with it (trig amplitude -> frequency)

    Returns:
        (parameters with pruned slots zeroed, updated mask, newly pruned slots in ascending order)
    """
    params = np.array(params, dtype=float)
    active = np.array(active, dtype=bool)
    if len(history) < window:
        return params, active, []
    recent = np.abs(np.stack(list(history)[-window:]))
    below = np.all(recent < threshold, axis=0)
    eligible = np.ones_like(active) if prunable is None else np.asarray(prunable, dtype=bool)
    newly = set(np.nonzero(active & below & eligible)[0].tolist())
    for slot in list(newly):
        partner = (partners or {}).get(slot)
        if partner is not None and active[partner]:
            newly.add(partner)
    pruned = sorted(newly)
    active[pruned] = False
    params[pruned] = 0.0
    return params, active, pruned
