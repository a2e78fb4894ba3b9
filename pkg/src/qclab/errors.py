"""Exception types shared across the package."""


class QclabError(Exception):
    """Base class for all package errors."""


class GridError(QclabError):
    """Grid construction or compatibility problem."""


class EmptyRegionError(QclabError):
    """A norm or integral was requested over a region with no cells."""


class OracleLimitError(QclabError):
    """A slow oracle was invoked on a grid above its configured size limit."""


class CoverError(QclabError):
    """Disk cover violates disjointness or coverage requirements."""


class SolverConvergenceError(QclabError):
    """Fixed-point solver hit max_iter with the residual still above tolerance."""

    def __init__(self, message, residual_history=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])


class InversionError(QclabError):
    """Newton inversion of a map failed (stagnation or target outside image)."""

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class DiscretizationError(QclabError):
    """A samplewise sanity bound failed on more cells than discretization allows."""


class ConfigError(QclabError):
    """Invalid run configuration (maps to CLI exit code 2)."""
