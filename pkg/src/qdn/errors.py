"""Exception hierarchy shared by every qdn module."""


class QDNError(Exception):
    """Base class for all errors raised by qdn."""


class OutOfRangeError(QDNError, IndexError):
    """A qubit or basis index does not fit the register it is used with."""


class DimensionError(QDNError, ValueError):
    """Two labstates (or a state and an operator) live on different registers."""


class NormalizationError(QDNError, ValueError):
    """A state that must be unit-norm is not."""


class ArgumentError(QDNError, ValueError):
    """An argument is outside the domain an operation accepts."""


class MissingRuleError(QDNError, KeyError):
    """A strict stage was asked to rewrite a generator it has no rule for."""

    def __str__(self):
        return Exception.__str__(self)


class ValidationError(QDNError):
    """A stage or program failed the semi-unitarity check."""

    def __init__(self, message, stage_index=None, deviation=None):
        super().__init__(message)
        self.stage_index = stage_index
        self.deviation = deviation


class UnsupportedStructureError(QDNError, ValueError):
    """An operation that needs rank-1 stages received a multi-qubit rule."""


class ResourceError(QDNError, RuntimeError):
    """A brute-force computation would exceed its configured cap."""


class InfeasibleError(QDNError, ValueError):
    """The requested object cannot exist (e.g. more orthonormal rows than columns)."""


class NetDefError(QDNError, ValueError):
    """Base for network definition parse failures; carries a location string."""

    def __init__(self, message, location=None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)


class NetDefSyntaxError(NetDefError):
    pass


class NetDefVersionError(NetDefError):
    pass


class NetDefRangeError(NetDefError):
    pass
