"""Graphical models for multi-source domain adaptation at desk scale.

Two trainable models over a shared prototype vocabulary: a conditional model
that classifies the nodes of an RBF-weighted relational graph with a two-layer
GCN, and an energy-based model that scores Markov networks over the same
observations and predicts labels from joint likelihoods.
"""

from .autodiff import Tensor, tensor, backward, no_grad
from .errors import CheckpointError, ConfigError, ContractError, MsdaError, NumericError
from .optim import Adam

__all__ = [
    "Adam",
    "CheckpointError",
    "ConfigError",
    "ContractError",
    "MsdaError",
    "NumericError",
    "Tensor",
    "backward",
    "no_grad",
    "tensor",
]
