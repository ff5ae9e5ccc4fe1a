"""Readout-time-averaged states, branch diagnostics, and worked models."""

from . import bipartite, localtime, models, qcore
from .errors import LtdError, NumericalError, ParameterError

__all__ = [
    "LtdError",
    "NumericalError",
    "ParameterError",
    "bipartite",
    "localtime",
    "models",
    "qcore",
]

__version__ = "0.1.0"
