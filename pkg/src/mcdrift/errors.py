"""Exception types shared across the package."""


class MCDriftError(Exception):
    """Base class for all package-specific errors."""


class ContractError(MCDriftError, ValueError):
    """A documented precondition was violated by the caller."""


class ParseError(MCDriftError, ValueError):
    """A stream file row could not be parsed."""


class SchemaError(MCDriftError, ValueError):
    """A stream file does not match the expected column layout."""


class NotWarmError(ContractError):
    """The sliding window has not yet accumulated a full window of points."""


class NotReadyError(ContractError):
    """The drift threshold has no history to bootstrap from yet."""


class NumericalError(MCDriftError, ArithmeticError):
    """A computation produced non-finite values."""


class ConfigError(MCDriftError, ValueError):
    """A run configuration is invalid or contains unknown keys."""
