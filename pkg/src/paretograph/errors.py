"""Exception types shared across the package."""


class ParetographError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(ParetographError, ValueError):
    """An input failed a structural or numerical validity check."""


class NonzeroDiagonalError(ValidationError):
    """Variogram diagonal contains a nonzero entry."""


class AsymmetryError(ValidationError):
    """A matrix that must be symmetric is not."""


class NegativeEntryError(ValidationError):
    """A variogram entry is negative."""


class IndefiniteVariogramError(ValidationError):
    """The variogram is not strictly conditionally negative definite."""


class NotPositiveDefiniteError(ParetographError, ValueError):
    """Cholesky factorization hit a non-positive pivot.

    Attributes
    ----------
    pivot : int
        1-based index of the failing pivot.
    """

    def __init__(self, pivot, message=None):
        self.pivot = pivot
        if message is None:
            message = f"matrix is not positive definite: pivot {pivot} is not positive"
        super().__init__(message)


class GraphError(ParetographError, ValueError):
    """A graph violates a structural requirement (connectivity, chordality, ...)."""


class NotBlockGraphError(GraphError):
    """The graph is not a block graph with the required clique bound.

    Attributes
    ----------
    reason : str
        Human-readable description; names the offending separator or clique
        when one exists.
    """

    def __init__(self, reason):
        self.reason = reason
        super().__init__(f"not a block graph: {reason}")


class DomainError(ParetographError, ValueError):
    """A point lies outside the L-shaped support of the model."""


class FitError(ParetographError, RuntimeError):
    """Numerical fitting failed irrecoverably."""
