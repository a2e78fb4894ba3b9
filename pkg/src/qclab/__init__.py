"""qclab: a numerical laboratory for planar quasiconformal analysis.

Principal solutions of the Beltrami equation via Beurling-transform Neumann
iteration, the Cauchy transform, disk coverings with gauge sums, truncated
coefficients, and the distributional-pairing experiments built on top of them.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DiscretizationError,
    EmptyRegionError,
    GridError,
    InversionError,
    OracleLimitError,
    QclabError,
    SolverConvergenceError,
)
from .grid import ComplexField, GridSpec, Region, integrate, lp_norm, sample, wirtinger

__all__ = [
    "ComplexField",
    "ConfigError",
    "DiscretizationError",
    "EmptyRegionError",
    "GridError",
    "GridSpec",
    "InversionError",
    "OracleLimitError",
    "QclabError",
    "Region",
    "SolverConvergenceError",
    "__version__",
    "integrate",
    "lp_norm",
    "sample",
    "wirtinger",
]
