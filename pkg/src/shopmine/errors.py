"""Exception types shared across the toolkit."""


class ShopmineError(Exception):
    """Base class for all input/validation errors raised by this package."""


class TemplateError(ShopmineError):
    """A workflow template is malformed or uses unsupported constructs."""


class TreeError(ShopmineError):
    """A process tree violates a structural invariant."""


class TpnSyntaxError(ShopmineError):
    """TPN text could not be parsed."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UndeclaredPlaceError(ShopmineError):
    """A TPN transition references a place that was never declared."""


class TransformError(ShopmineError):
    """A process tree cannot be turned into a Petri net."""


class LogFormatError(ShopmineError):
    """An execution log (YAML or XES) is malformed."""


class ModelInfeasibleError(ShopmineError):
    """No final marking of the net is reachable from its initial marking."""


class AnalyticsError(ShopmineError):
    """Invalid input to a feature/label/model operation."""


class ConvergenceError(AnalyticsError):
    """An iterative solver failed to reach its tolerance."""
