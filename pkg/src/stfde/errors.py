"""Exception types shared across the package."""


class DomainError(ValueError):
    """A parameter lies outside the mathematical domain of an operation."""


class ConfigurationError(ValueError):
    """Inconsistent or invalid problem/study configuration."""


class CapabilityError(RuntimeError):
    """Request exceeds the desk-scale limits this implementation supports."""
