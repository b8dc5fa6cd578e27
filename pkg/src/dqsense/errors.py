class ValidationError(ValueError):
    """Raised when an input violates a documented invariant."""


class NoAdvantageError(ValueError):
    """Raised when a quantity is undefined because no quantum advantage is possible."""


class UnsupportedScaleError(ValueError):
    """Raised when a request exceeds what the dense density-matrix kernel can hold."""
