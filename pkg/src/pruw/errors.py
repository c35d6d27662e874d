"""Exception types shared across the simulator."""


class PruwError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(PruwError):
    """An operation was invoked outside its mathematical domain."""


class ConfigError(PruwError):
    """A configuration violates a scheme precondition."""


class IntegrityError(PruwError):
    """Replicated storage is internally inconsistent (tamper or noise drift)."""


class ProtocolError(PruwError):
    """A wire message violates the protocol contract."""


class InconclusiveError(PruwError):
    """A statistical audit lacks the sample size to decide at its threshold."""
