"""Desk-scale numerics for random covers of the level-2 modular surface."""

from .errors import (
    AssemblyError,
    BasisMismatchError,
    CalibrationError,
    ConfigError,
    CoverlabError,
    DomainError,
    InvalidBandError,
    InvalidElementError,
    MeshError,
    NonTerminationError,
    NotConnectedError,
    NumericError,
)

__version__ = "0.1.0"
