"""Exception types shared by all modules."""


class StokesError(Exception):
    """Base class; ``details`` carries machine-readable diagnostics."""

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = dict(details or {})


class DomainError(StokesError, ValueError):
    pass


class UnsupportedConfigurationError(StokesError, ValueError):
    pass


class ResonanceSearchError(StokesError, RuntimeError):
    pass


class ExpansionDivergenceError(StokesError, RuntimeError):
    pass


class GridTooSmallError(StokesError, ValueError):
    pass


class ProjectionLeakError(StokesError, RuntimeError):
    pass


class NonConvergenceError(StokesError, RuntimeError):
    pass


class MisuseError(StokesError, ValueError):
    pass


class GeometryError(StokesError, RuntimeError):
    """The functional lacks the min-max geometry a search relies on."""
