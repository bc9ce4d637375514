"""
Training Loop
Shuffled mini-batches, Adam, scheduled regularization and periodic pruning
"""

import json
import os
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger

from phsysid.autodiff import grad, ops
from phsysid.core.errors import AutodiffError, ConfigError, SchemeUnavailableError, TrainingDivergedError
from phsysid.core.logging_setup import progress_logger
from phsysid.dynamics.types import Dataset
from phsysid.integrators import get_scheme

from .hyperparams import Hyperparams
from .objective import loss_terms
from .optimizer import AdamState, adam_step, prune


@dataclass
class TrainHistory:
    """Per-epoch record of one run"""

    losses: List[float] = field(default_factory=list)
    data_losses: List[float] = field(default_factory=list)
    penalties: List[float] = field(default_factory=list)
    active_terms: List[int] = field(default_factory=list)
    pruning_events: List[Tuple[int, int]] = field(default_factory=list)
    final_active: List[bool] = field(default_factory=list)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["pruning_events"] = [list(event) for event in self.pruning_events]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainHistory":
        return cls(
            losses=list(doc["losses"]),
            data_losses=list(doc["data_losses"]),
            penalties=list(doc["penalties"]),
            active_terms=list(doc["active_terms"]),
            pruning_events=[tuple(event) for event in doc["pruning_events"]],
            final_active=list(doc["final_active"]),
        )

    def save(self, path: str) -> None:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)


def epoch_permutation(seed: int, epoch: int, n: int) -> np.ndarray:
    return np.random.default_rng([seed, epoch]).permutation(n)


def _term_slots(model) -> np.ndarray:
    groups = model.coefficient_slots()
    return np.concatenate([np.asarray(v, dtype=int) for v in groups.values()])


def train(model, dataset: Dataset, hyper: Hyperparams):
    """
    Fit a model to the sample pairs of a dataset

    Args:
        model: PseudoHamiltonianModel or BaselineModel (left unmodified)
        dataset: Training data
        hyper: Hyperparameters

    Returns:
        (trained copy of the model, TrainHistory)
    """
    scheme = get_scheme(hyper.integrator)
    if not scheme.available:
        raise SchemeUnavailableError(f"scheme '{scheme.name}' cannot be used for training")
    if scheme.requires_separable and model.separable_split is None:
        raise SchemeUnavailableError(f"scheme '{scheme.name}' needs a separable system")
    x_n, x_np1, t_n = dataset.pairs()
    n_samples = x_n.shape[0]
    if n_samples == 0:
        raise ConfigError("dataset has no sample pairs")
    dt = dataset.dt

    model = model.copy()
    params, active = model.params.copy(), model.active.copy()
    prunable = np.zeros(model.n_params, dtype=bool)
    prunable[model.prunable_slots(hyper.prune_damping)] = True
    partners = model.frequency_partners()
    term_slots = _term_slots(model)
    snapshots = deque(maxlen=hyper.prune_history)
    state = AdamState.zeros(model.n_params)
    history = TrainHistory()

    logger.info(
        f"Training {type(model).__name__} on {n_samples} pairs: {hyper.epochs} epochs, "
        f"integrator={scheme.name}, lr={hyper.learning_rate}, batch={hyper.batch_size}"
    )
    for epoch in range(1, hyper.epochs + 1):
        reg_active = not (hyper.reg_drop_at_half and epoch > hyper.epochs / 2)
        order = epoch_permutation(hyper.seed, epoch, n_samples)
        total = data_total = penalty_total = 0.0

        for start in range(0, n_samples, hyper.batch_size):
            idx = order[start: start + hyper.batch_size]
            batch = (x_n[idx], x_np1[idx], t_n[idx])
            parts = {}

            def builder(theta):
                value, data, extra = loss_terms(
                    model, batch, dt, scheme, hyper.lam_h, hyper.lam_f, hyper.lam_r, reg_active, theta
                )
                parts["data"], parts["penalty"] = data, extra
                return value

            try:
                value, gradient = grad(builder, params)
            except (AutodiffError, TrainingDivergedError) as exc:
                history.final_active = active.tolist()
                logger.error(f"Training diverged in epoch {epoch}: {exc}")
                raise TrainingDivergedError(f"training diverged in epoch {epoch}: {exc}", history=history) from exc
            if not np.isfinite(value) or not np.all(np.isfinite(gradient)):
                history.final_active = active.tolist()
                logger.error(f"Training diverged in epoch {epoch}: loss {value}")
                raise TrainingDivergedError(f"non-finite loss in epoch {epoch}", history=history)

            params, state = adam_step(state, params, gradient, hyper.learning_rate, hyper.weight_decay, active)
            weight = len(idx)
            total += weight * value
            data_total += weight * _scalar(parts["data"])
            penalty_total += weight * _scalar(parts["penalty"])

        snapshots.append(params.copy())
        if hyper.prune_interval and epoch % hyper.prune_interval == 0:
            params, active, newly = prune(
                params, active, snapshots, hyper.prune_threshold, hyper.prune_history, prunable, partners
            )
            history.pruning_events.extend((epoch, int(slot)) for slot in newly)
            if newly:
                logger.debug(f"Epoch {epoch}: pruned {len(newly)} parameters")

        history.losses.append(total / n_samples)
        history.data_losses.append(data_total / n_samples)
        history.penalties.append(penalty_total / n_samples)
        history.active_terms.append(int(active[term_slots].sum()))
        progress_logger.bind(
            epoch=epoch,
            loss=history.losses[-1],
            data_loss=history.data_losses[-1],
            penalty=history.penalties[-1],
            active_terms=history.active_terms[-1],
        ).info("epoch complete")

    model.params, model.active = params, active
    history.final_active = active.tolist()
    logger.info(
        f"Training finished: loss {history.losses[0]:.4e} -> {history.losses[-1]:.4e}, "
        f"{history.active_terms[-1]} active terms"
    )
    return model, history


def _scalar(value) -> float:
    raw = value.value if ops.is_var(value) else value
    return float(np.asarray(raw).reshape(()))
