"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class UsageError(ValueError):
    """Arguments are individually valid but the combination is not supported."""


class UnsupportedOrderError(UsageError):
    """A requested order (Hermite degree, iterated-integral depth) is above the cap."""


class NumericalError(RuntimeError):
    """A numerical routine failed to reach its declared accuracy or stability."""


class ConfigError(ValueError):
    """An experiment or CLI configuration is malformed or regime-invalid."""
