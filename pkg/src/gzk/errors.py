"""Exception hierarchy shared across the toolkit.

Each class carries the CLI exit code it maps to.
"""


class GZKError(Exception):
    exit_code = 1


class ConfigError(GZKError):
    exit_code = 2


class NumericError(GZKError):
    exit_code = 3


class NonFinite(NumericError):
    """State became NaN/Inf or exceeded the blow-up ceiling."""

    def __init__(self, message, last_valid_time=None):
        super().__init__(message)
        self.last_valid_time = last_valid_time


class NoConvergence(NumericError):
    def __init__(self, message, last_residual=None):
        super().__init__(message)
        self.last_residual = last_residual


class Degenerate(NumericError):
    pass


class InvalidOrder(NumericError):
    pass


class ConstructionFailure(NumericError):
    pass


class ViolationFound(NumericError):
    def __init__(self, message, descriptor=None, ratio=None):
        super().__init__(message)
        self.descriptor = descriptor
        self.ratio = ratio


class DomainTooSmall(NumericError):
    pass


class ResolutionError(NumericError):
    pass


class IoError(GZKError):
    exit_code = 4


class MissingArtifact(IoError):
    pass
