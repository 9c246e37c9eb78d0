"""Exception types shared across the package."""


class CaliperError(Exception):
    """Base class for all package errors."""


class StreamError(CaliperError):
    """Malformed stream input: non-consecutive time index, dimension mismatch."""


class InsufficientWindowError(CaliperError):
    """The post-drift window is too short for the requested operation."""


class NumericalError(CaliperError):
    """A linear solve failed even after regularization."""


class DivergenceError(CaliperError):
    """Numerical integration produced non-finite state."""


class UndefinedEstimateError(CaliperError):
    """An empirical estimate has an empty conditioning set."""


class ConfigError(CaliperError):
    """Invalid experiment configuration."""


class IngestError(CaliperError):
    """Malformed CSV input; message carries row/column diagnostics."""
