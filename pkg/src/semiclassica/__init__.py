"""Semiclassical atomic physics toolkit."""

__version__ = "0.1.0"

from .errors import NumericalError, SemiclassicaError, ValidationError

__all__ = ["NumericalError", "SemiclassicaError", "ValidationError", "__version__"]
