"""Distributed quantum sensing with noisy GHZ states."""

from .errors import NoAdvantageError, UnsupportedScaleError, ValidationError

__version__ = "0.1.0"

__all__ = ["NoAdvantageError", "UnsupportedScaleError", "ValidationError", "__version__"]
