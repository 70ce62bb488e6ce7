"""Exception types shared across the toolkit."""


class PredsmcError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(PredsmcError, ValueError):
    """Operands have inconsistent or unsupported shapes."""


class DomainError(PredsmcError, ValueError):
    """Numeric input outside the operation's domain (non-finite, negative delay, ...)."""


class NotHurwitzError(PredsmcError, ValueError):
    """Matrix has spectrum outside the open left half-plane; no positive definite Lyapunov solution."""


class SingularMatrixError(PredsmcError, ValueError):
    """Matrix is singular or rank deficient where full rank is required."""


class UncontrollableError(PredsmcError, ValueError):
    """Controllability rank condition failed."""


class UnsupportedDimensionError(PredsmcError, ValueError):
    """Operation only implemented for scalar-channel dimensions."""


class HistoryUnderflowError(PredsmcError, LookupError):
    """Requested time lies outside the stored history window."""


class DivergenceError(PredsmcError, RuntimeError):
    """A simulated signal became non-finite.

    Carries the time of the failure and, when raised from the harness loop,
    the partial trace accumulated so far.
    """

    def __init__(self, message, t=None, trace=None):
        super().__init__(message)
        self.t = t
        self.trace = trace


class AssumptionViolationError(PredsmcError, RuntimeError):
    """An exogenous signal violated its declared bound during simulation."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class ScenarioError(PredsmcError, ValueError):
    """Scenario document failed validation; message starts with the offending field path."""


class TraceFormatError(PredsmcError, ValueError):
    """Trace file or object does not match the expected column layout."""
