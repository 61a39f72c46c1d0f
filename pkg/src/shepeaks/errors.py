"""Package exception hierarchy.

Plain ``ValueError`` is used for bad scalar arguments (negative times,
thresholds out of range).  The classes below separate failures that the
command line maps to distinct exit codes.
"""

from __future__ import annotations


class ShepeaksError(Exception):
    """Base class for package-specific failures."""


class ConfigError(ShepeaksError):
    """Invalid experiment configuration (CLI exit code 2)."""


class ModelError(ShepeaksError):
    """A covariance model or sampler violated its contract (exit code 3)."""


class EstimatorError(ShepeaksError):
    """An estimator was called outside its valid regime (exit code 3)."""
