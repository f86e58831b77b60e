"""Wireless federated learning with stochastically quantized updates.

Subpackages: :mod:`wqfl.roundopt` (per-round joint optimizer), :mod:`wqfl.fl`
(learning stack).  Modules: :mod:`wqfl.quant`, :mod:`wqfl.channel`,
:mod:`wqfl.bound`, :mod:`wqfl.experiment`.
"""
from .errors import ConfigError, EpsilonUnreachable, Infeasible, TrainingDiverged

__version__ = "0.1.0"

__all__ = ["ConfigError", "EpsilonUnreachable", "Infeasible", "TrainingDiverged", "__version__"]
