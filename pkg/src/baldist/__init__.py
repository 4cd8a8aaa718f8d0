"""Balanced districting toolkit.

Solvers, exact oracles, LP machinery, rounding schemes, and diagnostics for
the c-balanced districting problem on vertex-weighted graphs.
"""

from .core import (
    District,
    Districting,
    Instance,
    ParameterError,
    ValidationError,
    ValidationReport,
    canonical_json,
    districting_weight,
    find_star_center,
    is_c_balanced,
    validate_districting,
)

__version__ = "0.1.0"

__all__ = [
    "District",
    "Districting",
    "Instance",
    "ParameterError",
    "ValidationError",
    "ValidationReport",
    "canonical_json",
    "districting_weight",
    "find_star_center",
    "is_c_balanced",
    "validate_districting",
    "__version__",
]
