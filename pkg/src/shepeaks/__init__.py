"""Simulation and analysis toolkit for the stochastic heat equation with
flat initial data: exact Gaussian sampling of the linearized field,
finite-difference solution of the nonlinear equation coupled to its
linearization, and empirical fractal analysis of short-time peak sets.
"""

__version__ = "0.1.0"

from .errors import ConfigError, EstimatorError, ModelError, ShepeaksError
from .noise import SeedSpec

__all__ = [
    "__version__",
    "ConfigError",
    "EstimatorError",
    "ModelError",
    "ShepeaksError",
    "SeedSpec",
]
