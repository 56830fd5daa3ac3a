"""Exception types raised across the package."""


class InvalidStrategyError(ValueError):
    """A strategy names an unknown channel or exceeds its budget."""


class StructureError(ValueError):
    """The instance lacks the structure an algorithm requires (e.g. disjointness)."""


class DomainError(ValueError):
    """An argument lies outside the domain of a numerical routine."""


class ResourceError(RuntimeError):
    """An exhaustive computation would exceed the configured enumeration cap."""


class ConfigError(ValueError):
    """An experiment or generator configuration is inconsistent."""
