"""Exception types shared across the toolkit."""


class EntrosaError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(EntrosaError):
    """Invalid parameters, unknown names, or malformed run configuration."""


class NumericalError(EntrosaError):
    """A numerical procedure failed (non-convergence, too many bad outputs)."""


class SparseGridError(EntrosaError):
    """Histogram grid too sparse for a reliable conditional-entropy estimate."""
