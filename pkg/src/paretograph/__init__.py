"""Sparse graphical models for multivariate extremes.

Multivariate Pareto distributions that factorize on block graphs: construction
and validation of dependence parameters, exact simulation, censored likelihood
inference, and extremal graph structure learning.
"""

from .errors import (
    AsymmetryError,
    DomainError,
    FitError,
    GraphError,
    IndefiniteVariogramError,
    NegativeEntryError,
    NonzeroDiagonalError,
    NotBlockGraphError,
    NotPositiveDefiniteError,
    ParetographError,
    ValidationError,
)
from .numerics import (
    MinimizeResult,
    MvnResult,
    RngStream,
    bvn_cdf,
    cholesky,
    minimize,
    mvn_cdf,
    norm_cdf,
    norm_ppf,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ParetographError",
    "ValidationError",
    "NonzeroDiagonalError",
    "AsymmetryError",
    "NegativeEntryError",
    "IndefiniteVariogramError",
    "NotPositiveDefiniteError",
    "GraphError",
    "NotBlockGraphError",
    "DomainError",
    "FitError",
    "RngStream",
    "norm_cdf",
    "norm_ppf",
    "bvn_cdf",
    "MvnResult",
    "mvn_cdf",
    "cholesky",
    "MinimizeResult",
    "minimize",
]
