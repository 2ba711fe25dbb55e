"""Online learning with continuous exponential weights and fixed share."""

from .core import (
    ComparatorSequence,
    DataPoint,
    DomainSpec,
    LossKind,
    LossSpec,
    RegretReport,
    dynamic_regret,
    loss_eval,
    path_length,
)
from .gaussian import GaussianDist, Pushforward1D, entropy, kl_divergence

__all__ = [
    "ComparatorSequence",
    "DataPoint",
    "DomainSpec",
    "GaussianDist",
    "LossKind",
    "LossSpec",
    "Pushforward1D",
    "RegretReport",
    "dynamic_regret",
    "entropy",
    "kl_divergence",
    "loss_eval",
    "path_length",
]

__version__ = "0.1.0"
