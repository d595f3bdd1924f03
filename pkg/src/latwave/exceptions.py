"""Exception hierarchy.

Two families matter to callers (and to the CLI exit codes):

* :class:`ValidationError` - bad input or a violated precondition.
* :class:`NumericalFailure` - a computation ran but could not deliver
  (no convergence, positivity loss, broken ordering, ...).
"""


class LatwaveError(Exception):
    """Base class for all package errors."""


class ValidationError(LatwaveError, ValueError):
    """Input rejected before any numerics ran."""


class NumericalFailure(LatwaveError, RuntimeError):
    """A numerical procedure failed to meet its contract."""


# model-core
class NonPositiveParameter(ValidationError):
    pass


class SubcriticalTransmission(ValidationError):
    pass


class SpeedNotSupercritical(ValidationError):
    pass


class ToleranceNotReached(NumericalFailure):
    pass


# sandwich
class SelectionFailed(NumericalFailure):
    pass


class KinkTooClose(ValidationError):
    pass


# profile-solver
class TruncationTooSmall(ValidationError):
    pass


class BadGrid(ValidationError):
    pass


class SandwichViolation(NumericalFailure):
    pass


class MaxIterExceeded(NumericalFailure):
    def __init__(self, message, gap=None, iterations=None):
        super().__init__(message)
        self.gap = gap
        self.iterations = iterations


class MonotonicityBroken(NumericalFailure):
    pass


class SequenceNotCauchy(NumericalFailure):
    pass


# lds-sim
class BadWidth(ValidationError):
    pass


class StepTooLarge(ValidationError):
    pass


class PositivityLost(NumericalFailure):
    def __init__(self, message, t=None, site=None):
        super().__init__(message)
        self.t = t
        self.site = site


class FrontNotFound(NumericalFailure):
    pass


class FrontHitBoundary(NumericalFailure):
    pass
