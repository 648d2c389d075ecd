"""
Exception types raised across the toolkit.

All of them are ValueError subclasses so callers that only know about
ValueError keep working.
"""


class NonlocalityError(ValueError):
    """Base class for every domain failure reported by the toolkit."""


class DomainError(NonlocalityError):
    """A parameter lies outside the domain of the requested operation."""


class DimensionError(NonlocalityError):
    """Qubit count or matrix shape does not fit the operation."""


class SizeError(NonlocalityError):
    """A construction would exceed a configured size budget."""


class ContractError(NonlocalityError):
    """An input violates a precondition such as Hermiticity."""


class ArityError(NonlocalityError):
    """Question and answer lists have different lengths."""


class UndefinedError(NonlocalityError):
    """The requested quantity does not exist for this input."""
