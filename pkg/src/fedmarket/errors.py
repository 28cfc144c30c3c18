"""Exception hierarchy shared by every fedmarket module."""


class FedMarketError(Exception):
    """Base class for all errors raised by fedmarket."""


class InvalidConfigError(FedMarketError, ValueError):
    """A mechanism or scenario parameter is outside its allowed domain."""

    def __init__(self, message, field_path=None, location=None):
        self.field_path = field_path
        self.location = location
        prefix = ""
        if location:
            prefix += f"{location}: "
        if field_path:
            prefix += f"{field_path}: "
        super().__init__(prefix + message)


class InvalidInputError(FedMarketError, ValueError):
    """Arguments to an operation have the wrong shape or domain."""


class InvalidInstanceError(FedMarketError, ValueError):
    """A market instance references unknown agents or malformed edges."""


class UnsupportedScopeError(FedMarketError):
    """The operation is only defined for an empty leakage graph."""


class DegenerateMarketError(FedMarketError):
    """The market is too small for the forward auction to run."""


class SearchError(FedMarketError):
    """A bisection interval does not bracket anything searchable."""


class ContractViolationError(FedMarketError):
    """A supplied rule broke its monotonicity contract."""


class SizeError(FedMarketError, ValueError):
    """Input too large for exhaustive enumeration."""


class SchemaVersionError(FedMarketError):
    """A stored record was written with an incompatible schema version."""
