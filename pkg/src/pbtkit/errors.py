"""Exception types shared across the package."""


class PbtError(Exception):
    """Base class for all package errors."""


class DomainError(PbtError):
    """Arguments outside an operation's domain (bad partition, index, range)."""


class UnsupportedVariantError(PbtError):
    """Protocol variant or (variant, d) combination without a defined formula."""


class ResourceCapError(PbtError):
    """Requested construction exceeds the configured size caps."""


class NotPositiveSemidefiniteError(PbtError):
    """An operator expected to be PSD has a significantly negative eigenvalue."""


class ConsistencyError(PbtError):
    """Two internal computation routes disagree beyond tolerance."""


class LabelingError(PbtError):
    """A numerical eigenblock could not be matched to its predicted label."""
