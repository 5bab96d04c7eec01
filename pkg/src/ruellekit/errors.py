"""Exception hierarchy shared by every module."""


class RuelleKitError(Exception):
    """Base class for all toolkit errors."""


class InvalidArgumentError(RuelleKitError, ValueError):
    pass


class ResourceLimitError(RuelleKitError):
    """A table, matrix or enumeration would exceed the configured cap."""


class IterationLimitError(RuelleKitError):
    def __init__(self, message, residual_h=float("nan"), residual_nu=float("nan")):
        super().__init__(message)
        self.residual_h = residual_h
        self.residual_nu = residual_nu


class NumericalFailureError(RuelleKitError):
    pass


class NormalizationError(RuelleKitError):
    pass


class ContourCollisionError(RuelleKitError):
    pass


class DegeneratePairingError(RuelleKitError):
    pass


class DegenerateSeriesError(RuelleKitError):
    pass


class PrecisionError(RuelleKitError):
    pass


class InequalityViolationError(RuelleKitError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness
