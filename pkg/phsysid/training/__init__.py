"""
Loss on the discretization scheme, Adam, pruning and the training loop
"""

from .hyperparams import Hyperparams
from .objective import Batch, loss, loss_terms, penalty
from .optimizer import AdamState, adam_step, prune
from .trainer import TrainHistory, epoch_permutation, train

__all__ = [
    'Hyperparams',
    'Batch',
    'loss',
    'loss_terms',
    'penalty',
    'AdamState',
    'adam_step',
    'prune',
    'TrainHistory',
    'epoch_permutation',
    'train',
]
