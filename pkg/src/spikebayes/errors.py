"""Exception types raised by spikebayes.

All of them are ValueError subclasses so callers that only care about
"bad input" can keep catching ValueError.
"""

from __future__ import annotations


class SpikeBayesError(ValueError):
    """Base class for library errors."""


class AssumptionError(SpikeBayesError):
    """Intensity bounded-away-from-zero assumption (A1) is violated."""


class DegenerateModelError(SpikeBayesError):
    """A model or data set cannot support the requested operation."""


class QuadratureError(SpikeBayesError):
    """Adaptive quadrature met a non-finite integrand value."""


class FigureError(SpikeBayesError):
    """Unknown figure id."""


class ConfigError(SpikeBayesError):
    """Invalid experiment configuration; always names the offending field."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"config field '{field}': {message}")


class DatasetError(SpikeBayesError):
    """Malformed dataset or intensity CSV."""
